from weakvalue.cli import main

main()
