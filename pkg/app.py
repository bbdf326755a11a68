# /app.py

import sys

from dotenv import load_dotenv

# Load environment variables from .env file at the earliest moment.
load_dotenv()

from src.cli.routes import run


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
