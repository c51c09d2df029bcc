from hbn_spin_phonon.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
