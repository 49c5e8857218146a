from polymer.cli import main

raise SystemExit(main())
