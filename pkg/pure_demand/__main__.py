"""Run the command-line tool with `python -m pure_demand`."""

from .cli import main

raise SystemExit(main())
