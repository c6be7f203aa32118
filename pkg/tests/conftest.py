def pytest_addoption(parser):
    parser.addoption(
        "--include-slow",
        action="store_true",
        dest="include-slow",
        default=False,
        help="enable full-size studies and cost scaling fits",
    )
