"""Allow ``python -m dawnseg`` as an alias for the ``dawn`` console script."""

from .cli import main

main()
