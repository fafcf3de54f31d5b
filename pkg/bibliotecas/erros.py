"""Hierarquia de exceções do perturb_forge.

Erros de validação também herdam de ValueError e erros de arquivo de OSError,
para que os chamadores possam capturar pelas classes padrão do Python.
"""


class PerturbForgeError(Exception):
    exit_code = 2


# 🧮 Erros de validação de dados

class InvalidQuaternion(PerturbForgeError, ValueError):
    pass


class InvalidParameter(PerturbForgeError, ValueError):
    pass


class EmptyFrame(PerturbForgeError, ValueError):
    pass


class FrameShapeError(PerturbForgeError, ValueError):
    pass


class KindMismatch(PerturbForgeError, ValueError):
    pass


class KernelTooLarge(PerturbForgeError, ValueError):
    pass


class DelayExceedsSequence(PerturbForgeError, ValueError):
    pass


class NoAssociations(PerturbForgeError, ValueError):
    pass


class TooShort(PerturbForgeError, ValueError):
    pass


class DegenerateGroundTruth(PerturbForgeError, ValueError):
    pass


class DegenerateGeometry(PerturbForgeError, ValueError):
    pass


class EmptyInput(PerturbForgeError, ValueError):
    pass


class PlanShapeError(PerturbForgeError, ValueError):
    pass


class SchemaError(PerturbForgeError, ValueError):
    pass


class SeverityTableError(SchemaError):
    def __init__(self, mensagem: str, celulas: list[str] | None = None):
        super().__init__(mensagem)
        self.celulas = celulas or []


# 📁 Erros de arquivo / layout

class IoError(PerturbForgeError, OSError):
    def __init__(self, mensagem: str, caminho: str | None = None):
        super().__init__(mensagem)
        self.caminho = caminho


class LayoutError(IoError):
    pass


class DecodeError(IoError):
    pass


class MissingSource(IoError):
    pass
