import sys

from boost.agb import cli


if __name__ == '__main__':
    sys.exit(cli.run())
