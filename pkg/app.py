"""
Inscribed rectangle spectra - command line entry

    python app.py spectrum builtin:ellipse-2-1
    python app.py rects builtin:circle --ratio 1
    python app.py order builtin:dome-1 builtin:dome-2-rot-half
    python app.py verify kemperman --seed 1
"""

import sys

from rectspec.cli_report import main


if __name__ == "__main__":
    sys.exit(main())
