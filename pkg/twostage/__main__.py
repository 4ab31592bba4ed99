import sys

from twostage import harness

sys.exit(harness.main())
