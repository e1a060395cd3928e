from enum import Enum


class Mode(str, Enum):
    """Physical model a grid, kernel or state belongs to."""

    KAC = "kac1d"
    BOLTZMANN = "boltzmann3d"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "kac": cls.KAC,
            "kac1d": cls.KAC,
            "boltzmann": cls.BOLTZMANN,
            "boltzmann3d": cls.BOLTZMANN,
            "boltzmannradial3d": cls.BOLTZMANN,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown mode {value!r}") from None

    @property
    def canonical_second_moment(self) -> float:
        """Second moment fixed by the normalisation: 1 in 1D, 3 in 3D."""
        return 1.0 if self is Mode.KAC else 3.0
