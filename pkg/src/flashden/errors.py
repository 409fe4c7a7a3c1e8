"""Exception hierarchy shared by every layer of the simulator."""


class FlashdenError(Exception):
    """Base class for all simulator errors."""


# NAND chip
class OutOfRange(FlashdenError, IndexError):
    pass


class ProgramOnProgrammedPage(FlashdenError):
    pass


class NonSequentialProgram(FlashdenError):
    pass


class BadBlockAccess(FlashdenError):
    pass


class PageNotProgrammed(FlashdenError):
    pass


class GeometryMismatch(FlashdenError, ValueError):
    pass


class MalformedImage(FlashdenError, ValueError):
    pass


# FTL
class OutOfLogicalRange(FlashdenError, IndexError):
    pass


class DeviceFull(FlashdenError):
    pass


class NothingToReclaim(FlashdenError):
    pass


class TriggerNotMet(FlashdenError):
    pass


class NoFreeBlockForRescue(DeviceFull):
    pass


class CorruptOob(FlashdenError):
    pass


# volumes and file systems
class EmptyPassphrase(FlashdenError, ValueError):
    pass


class HiddenTooLarge(FlashdenError, ValueError):
    pass


class RegionFull(FlashdenError):
    pass


class UnknownSector(FlashdenError):
    pass


class NoFreeSlot(FlashdenError):
    pass
