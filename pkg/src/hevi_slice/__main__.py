"""Allows ``python -m hevi_slice``"""
import sys

from hevi_slice.cli_io.cli import main

sys.exit(main())
