"""Allow running the package as a module with python -m random_euler_filters."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
