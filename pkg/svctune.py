#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# This software is under the MIT License

"""The main entry of the C tuning tool

Usage: python svctune.py {tune,grid,eval,trace,compare} ...
"""

if __name__ == '__main__':
    import os
    import sys

    # Insert the home directory of `svctune` to sys.path
    svctune_home = os.path.dirname(os.path.realpath(__file__))
    if svctune_home not in sys.path:
        sys.path.insert(0, svctune_home)
    from pylib.commands import SvcTuneCmd

    try:
        sys.exit(SvcTuneCmd.main())
    except Exception as e:
        from pylib.sys_utils import debug_enabled

        if debug_enabled():
            import traceback

            traceback.print_exc(file=sys.stderr)
        else:
            print('[ERROR] {}'.format(e), file=sys.stderr)
        sys.exit(1)
