import sys

from speech_annotator.cli import main

sys.exit(main())
