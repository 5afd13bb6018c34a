"""Exception hierarchy shared by the parser, loaders, kernels and pipeline."""


class MolSpaceError(Exception):
    """Base class for every error raised by molspace."""


# -- SMILES parsing ---------------------------------------------------------

class SmilesError(MolSpaceError, ValueError):
    """A SMILES string could not be parsed.

    ``offset`` is the byte offset of the offending token in the input.
    """

    def __init__(self, message, offset, smiles=None):
        self.offset = offset
        self.smiles = smiles
        super().__init__(f"{message} (offset {offset})")


class EmptyInput(SmilesError):
    pass


class InvalidSyntax(SmilesError):
    pass


class UnmatchedRingBond(SmilesError):
    pass


class UnbalancedParenthesis(SmilesError):
    pass


class UnknownElement(SmilesError):
    pass


class UnsupportedFeature(SmilesError):
    pass


class ValenceViolation(SmilesError):
    pass


# -- fingerprints -----------------------------------------------------------

class WidthMismatch(MolSpaceError, ValueError):
    pass


# -- distance spaces --------------------------------------------------------

class UnknownMolecule(MolSpaceError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NoCommonTargets(MolSpaceError):
    pass


class EmptyMatrix(MolSpaceError, ValueError):
    pass


class DimensionMismatch(MolSpaceError, ValueError):
    pass


class ElementNotInVocabulary(MolSpaceError, ValueError):
    pass


# -- rankings ---------------------------------------------------------------

class UnknownAnchor(UnknownMolecule):
    pass


class EmptyUniverse(MolSpaceError, ValueError):
    pass


class UniverseMismatch(MolSpaceError, ValueError):
    pass


class AnchorMismatch(MolSpaceError, ValueError):
    pass


# -- pipeline ---------------------------------------------------------------

class KTooLarge(MolSpaceError, ValueError):
    pass


class UniverseTooSmall(MolSpaceError, ValueError):
    pass


class SampleTooLarge(MolSpaceError, ValueError):
    pass


# -- file loading -----------------------------------------------------------

class LoadError(MolSpaceError):
    """A data file is malformed. Carries the file name and 1-based line."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.reason = message
        where = f"{self.path}:{line}" if line else self.path
        super().__init__(f"{where}: {message}")
