"""Pipeline configuration: defaults, flat key=value config files, flag overrides."""

from dataclasses import dataclass, fields

from .descriptors import DESCRIPTOR_NAMES

__all__ = ["PipelineConfig", "load_config_file", "build_config"]

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class PipelineConfig:
    patch_size: int = 256
    cell_size: int = 8
    coeffs: int = 36
    global_coeffs: int = 1024
    descriptor: str = "bpd-ldct"
    clahe_clip: float = 2.0
    clahe_stage1_tiles: int = 8
    clahe_stage2_tiles: int = 4
    tiles_are_pixels: bool = False
    smote_k: int = 5
    no_smote: bool = False
    svm_c: float = 1.0
    svm_gamma: object = "auto"
    grid_search: bool = False
    inner_folds: int = 3
    tol: float = 1e-3
    folds: int = 5
    no_stratify: bool = False
    seed: int = 42
    jobs: int = 1

    def validate(self) -> "PipelineConfig":
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        if self.cell_size < 1 or self.patch_size % self.cell_size != 0:
            raise ValueError(
                "cell_size %d must divide patch_size %d" % (self.cell_size, self.patch_size)
            )
        if not 1 <= self.coeffs <= self.cell_size**2:
            raise ValueError(
                "coeffs must be in [1, %d], got %d" % (self.cell_size**2, self.coeffs)
            )
        if not 1 <= self.global_coeffs <= self.patch_size**2:
            raise ValueError(
                "global_coeffs must be in [1, %d], got %d" % (self.patch_size**2, self.global_coeffs)
            )
        if self.descriptor not in DESCRIPTOR_NAMES:
            raise ValueError(
                "descriptor must be one of %s, got %r" % (", ".join(DESCRIPTOR_NAMES), self.descriptor)
            )
        if self.descriptor == "bpd-ldct" and self.coeffs > 63:
            raise ValueError("bpd-ldct supports at most 63 coeffs, got %d" % self.coeffs)
        if not self.clahe_clip > 1.0:
            raise ValueError("clahe_clip must be > 1.0")
        if self.clahe_stage1_tiles < 1 or self.clahe_stage2_tiles < 1:
            raise ValueError("CLAHE tile counts must be >= 1")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.inner_folds < 2:
            raise ValueError("inner_folds must be >= 2")
        if self.smote_k < 1:
            raise ValueError("smote_k must be >= 1")
        if not self.svm_c > 0:
            raise ValueError("svm_c must be positive")
        if self.svm_gamma != "auto" and not float(self.svm_gamma) > 0:
            raise ValueError("svm_gamma must be positive or 'auto'")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        return self

    def echo(self) -> dict:
        """Resolved settings as a plain dict for embedding in artifacts."""
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def echo_lines(self) -> list:
        return ["%s=%s" % (k, v) for k, v in sorted(self.echo().items())]


def _parse_value(name: str, kind, raw: str):
    if name == "svm_gamma":
        return "auto" if raw.strip().lower() == "auto" else float(raw)
    if kind is bool:
        low = raw.strip().lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError("config key %s: expected a boolean, got %r" % (name, raw))
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw.strip()


def load_config_file(path) -> dict:
    """Parse a flat key=value config file; '#' lines are comments."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError("config %s line %d: expected key=value, got %r" % (path, line_no, stripped))
            key, _, value = stripped.partition("=")
            values[key.strip()] = value.strip()
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then config-file values, then non-None flag overrides.

    Unknown config-file keys are a hard error.
    """
    cfg = PipelineConfig()
    known = {f.name for f in fields(cfg)}
    kinds = {f.name: type(getattr(cfg, f.name)) for f in fields(cfg)}
    if file_values:
        unknown = sorted(set(file_values) - known)
        if unknown:
            raise ValueError("unknown config keys: %s" % ", ".join(unknown))
        for key, raw in file_values.items():
            setattr(cfg, key, _parse_value(key, kinds[key], raw))
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in known:
                raise ValueError("unknown config override %r" % key)
            setattr(cfg, key, value)
    return cfg.validate()
