class LabError(Exception):
    """Raised when an operation's precondition or hypothesis check fails.

    ``code`` is a stable identifier (``SMALL_NORM``, ``ZERO_POLY``, ...) that
    reports and the CLI use instead of the message text.
    """

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)
