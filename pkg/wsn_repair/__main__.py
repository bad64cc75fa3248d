from __future__ import annotations

from wsn_repair import main


def main_call(name):
    if name == "__main__":
        main.main()


main_call(name=__name__)
