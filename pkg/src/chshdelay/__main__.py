from chshdelay.cli import main

raise SystemExit(main())
