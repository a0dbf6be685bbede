from hali.cli import main


main()
