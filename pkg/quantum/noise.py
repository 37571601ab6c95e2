"""
Structured physical noise on n identical sites and the sector
decomposition of a noisy encoding.

A local channel acts either on one uniformly chosen site (a mixture,
"single") or on every site independently ("independent").  Local Kraus
operators must either stay inside the site or send it to a vacuum level
appended as the last index of the local output.  Erased sites carry an
orthogonal flag, so the noisy encoded output splits into orthogonal
sectors labelled by which sites were erased.  Each sector stores the
compressed encoded Kraus operators F̃ = Q†K W and their θ-derivatives, so
no n-site channel is ever materialised.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from quantum.channel import (
    Channel, dephasing_channel, erasure_channel, identity_channel, make_channel
)
from quantum.spectral import herm_func, range_basis
from quantum.symmetry import U1Code, extreme_logical_states
from system.core import STRUCT_TOL
from system.errors import DimensionError, DomainError

logger = logging.getLogger(__name__)

NOISE_MODELS = ("single", "independent")
# sectors without charge information are kept uncompressed up to this native dimension
IDENTITY_BASIS_MAX = 64
# product Kraus operators enumerated for independent noise
INDEPENDENT_KRAUS_MAX = 2 ** 16
CHARGE_DECIMALS = 9


class LocalNoise:
    """A local channel applied to one random site or to every site"""

    def __init__(self, local: Channel, n_sites: int, model: str = "single",
                 probs: Optional[Sequence[float]] = None, name: str = "noise"):
        """
        Args:
            local: Site channel, output dimension d (no vacuum) or d + 1
            n_sites: Number of sites
            model: "single" (mixture over sites) or "independent" (tensor power)
            probs: Site probabilities of the mixture, uniform by default
            name: Label used in reports
        """
        if model not in NOISE_MODELS:
            raise DomainError(f"Unknown noise model '{model}', expected one of {NOISE_MODELS}")
        if n_sites < 1:
            raise DimensionError("At least one site is required")
        d = local.dim_in
        if local.dim_out not in (d, d + 1):
            raise DimensionError(f"Local output dimension {local.dim_out} must be {d} or {d + 1}")
        self.local = local
        self.n_sites = n_sites
        self.model = model
        self.name = name
        self.site_dim = d
        kraus = local.kraus
        has_vacuum = local.dim_out == d + 1
        inner_residual = np.max(np.abs(kraus[:, d:, :]), axis=(1, 2)) if has_vacuum else np.zeros(len(kraus))
        flag_residual = np.max(np.abs(kraus[:, :d, :]), axis=(1, 2))
        self.flagged = (flag_residual <= STRUCT_TOL) & has_vacuum
        inner = inner_residual <= STRUCT_TOL
        if not np.all(self.flagged | inner):
            raise DomainError("Each local Kraus operator must act inside the site or map it to the vacuum")
        self.inner = inner & ~self.flagged
        if model == "single":
            probs = np.full(n_sites, 1.0 / n_sites) if probs is None else np.asarray(probs, dtype=float)
            if probs.shape != (n_sites,) or np.any(probs < 0) or abs(probs.sum() - 1) > STRUCT_TOL:
                raise DomainError("Site probabilities must be a distribution over the sites")
            self.probs = probs
        else:
            self.probs = None

    def __repr__(self) -> str:
        return f"LocalNoise({self.name}, n={self.n_sites}, model={self.model})"

    @property
    def flag_rows(self) -> np.ndarray:
        """<vac|k_α for the flagged local Kraus operators -> (r_f, d)"""
        return self.local.kraus[self.flagged, self.site_dim, :]

    @property
    def inner_kraus(self) -> np.ndarray:
        """In-site blocks of the non-flagged local Kraus operators -> (r_i, d, d)"""
        return self.local.kraus[self.inner, :self.site_dim, :]

    @property
    def is_erasure(self) -> bool:
        """Every local Kraus operator sends the site to the vacuum"""
        return bool(np.all(self.flagged))

    def local_output_charge(self, site_charge: np.ndarray) -> np.ndarray:
        """Diagonal of the local output charge; the vacuum carries charge 0"""
        if self.local.dim_out == self.site_dim:
            return np.asarray(site_charge, dtype=float)
        return np.concatenate([site_charge, [0.0]])

    def charge_shifts(self, site_charge: np.ndarray) -> Tuple[np.ndarray, float]:
        """
        c_α with k_α h - h_out k_α = c_α k_α, and the largest residual.
        A small residual means the local noise commutes with the rotation
        up to a phase per Kraus operator.
        """
        h_in = np.diag(site_charge)
        h_out = np.diag(self.local_output_charge(site_charge))
        shifts = np.zeros(self.local.n_kraus)
        residual = 0.0
        for index, k in enumerate(self.local.kraus):
            commutator = k @ h_in - h_out @ k
            norm = np.vdot(k, k).real
            shifts[index] = np.vdot(k, commutator).real / norm if norm > 0 else 0.0
            residual = max(residual, float(np.max(np.abs(commutator - shifts[index] * k))))
        return shifts, residual

    def global_channel(self, max_dim: int = 4096) -> Channel:
        """Dense n-site channel; site outputs ordered like the inputs"""
        d_out = self.local.dim_out
        if d_out ** self.n_sites * self.site_dim ** self.n_sites > max_dim * max_dim:
            raise DimensionError(f"Dense {self.n_sites}-site channel exceeds the size cap")
        embed = np.eye(d_out, self.site_dim)
        kraus = []
        if self.model == "single":
            for site in range(self.n_sites):
                for k in self.local.kraus:
                    factors = [embed] * self.n_sites
                    factors[site] = k
                    kraus.append(np.sqrt(self.probs[site]) * _kron_all(factors))
        else:
            for choice in itertools.product(range(self.local.n_kraus), repeat=self.n_sites):
                kraus.append(_kron_all([self.local.kraus[c] for c in choice]))
        return make_channel(np.stack(kraus), tol=1e-9)

    def parts(self) -> List[Tuple[float, Channel]]:
        """(probability, site channel) pairs of a mixture; probability 1 for independent sites"""
        if self.model == "single":
            return [(float(q), self.local) for q in self.probs]
        return [(1.0, self.local) for _ in range(self.n_sites)]


def _kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = factors[0]
    for factor in factors[1:]:
        out = np.kron(out, factor)
    return out


def erasure_noise(n_sites: int, p: float = 1.0, model: str = "single", site_dim: int = 2) -> LocalNoise:
    """Single-site erasure mixture (model single) or independent erasures with probability p"""
    return LocalNoise(erasure_channel(site_dim, p), n_sites, model, name=f"erasure(p={p:g})")


def dephasing_noise(n_sites: int, p: float, model: str = "single") -> LocalNoise:
    return LocalNoise(dephasing_channel(p), n_sites, model, name=f"dephasing(p={p:g})")


def identity_noise(n_sites: int, site_dim: int = 2) -> LocalNoise:
    return LocalNoise(identity_channel(site_dim), n_sites, "single", name="identity")


@dataclass
class Sector:
    """
    One orthogonal block of the noisy encoded output.

    kraus and tangent hold F̃_a = Q†F_a and ∂F̃_a = Q†∂F_a as (a, k, d_L)
    arrays.  basis is Q (None when uncompressed); charge is the diagonal of
    the output charge in the compressed basis and shifts the per-Kraus
    phase c_a, both None when the sector has no charge information.
    """
    label: str
    weight: float
    kraus: np.ndarray
    tangent: np.ndarray
    basis: Optional[np.ndarray] = None
    charge: Optional[np.ndarray] = None
    shifts: Optional[np.ndarray] = None
    native_dim: int = 0

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    @property
    def covariant(self) -> bool:
        return self.charge is not None and self.shifts is not None

    def rotated(self, code: U1Code, theta: float) -> np.ndarray:
        """F̃_a(θ) = Q†K_a U_S(θ) W U_L(θ)† = e^{-iθc_a} e^{-iθq} F̃_a U_L(θ)†"""
        if not self.covariant:
            raise DomainError(f"Sector {self.label} has no charge information; rotated encodings unavailable")
        u_l = code.logical.unitary(theta)
        phases = np.exp(-1j * theta * self.charge)[None, :, None] * np.exp(-1j * theta * self.shifts)[:, None, None]
        return phases * (self.kraus @ u_l.conj().T)

    def output_phases(self, theta: float) -> np.ndarray:
        """Diagonal of the output rotation e^{-iθq} in the compressed basis"""
        if self.charge is None:
            raise DomainError(f"Sector {self.label} has no charge information")
        return np.exp(-1j * theta * self.charge)


def _contract_row(tensor: np.ndarray, row: np.ndarray, axis: int) -> np.ndarray:
    """<row| on one site axis"""
    return np.tensordot(row, tensor, axes=([0], [axis]))


def _apply_site(tensor: np.ndarray, op: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, tensor, axes=([1], [axis])), 0, axis)


def _site_charge_total(site_charge: np.ndarray, count: int) -> np.ndarray:
    total = np.zeros(1)
    for _ in range(count):
        total = np.add.outer(total, site_charge).reshape(-1)
    return total


def _charges_consistent(code: U1Code) -> bool:
    if code.site_charge is None or not code.physical.diagonal:
        return False
    total = _site_charge_total(code.site_charge, code.n_sites)
    return bool(np.max(np.abs(total - code.physical.H)) <= 1e-9)


def _compress(columns: np.ndarray, charge: Optional[np.ndarray], native_dim: int,
              compress: bool) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    """Basis Q of the sector span and the compressed charge diagonal"""
    if not compress or (charge is None and native_dim <= IDENTITY_BASIS_MAX):
        return None, charge
    if charge is None:
        return range_basis(columns, 1e-12), None
    rounded = np.round(charge, CHARGE_DECIMALS)
    blocks, values = [], []
    for eta in np.unique(rounded):
        mask = rounded == eta
        local = range_basis(columns[mask], 1e-12)
        if local.shape[1] == 0:
            continue
        embedded = np.zeros((native_dim, local.shape[1]), dtype=complex)
        embedded[mask] = local
        blocks.append(embedded)
        values.append(np.full(local.shape[1], eta))
    return np.concatenate(blocks, axis=1), np.concatenate(values)


def _make_sector(label: str, native: List[np.ndarray], tangent: List[np.ndarray], charge: Optional[np.ndarray],
                 shifts: Optional[np.ndarray], d_logical: int, compress: bool) -> Sector:
    native = np.stack(native)
    tangent = np.stack(tangent)
    native_dim = native.shape[1]
    columns = np.concatenate([np.concatenate(list(native), axis=1), np.concatenate(list(tangent), axis=1)], axis=1)
    basis, compressed_charge = _compress(columns, charge, native_dim, compress)
    if basis is not None:
        kraus = np.einsum("ji,ajk->aik", basis.conj(), native)
        dkraus = np.einsum("ji,ajk->aik", basis.conj(), tangent)
        leak = float(np.max(np.abs(np.einsum("ij,ajk->aik", basis, kraus) - native)))
        if leak > 1e-9:
            raise DomainError(f"Sector {label} basis misses part of the encoded span", leak)
    else:
        kraus, dkraus = native, tangent
    weight = float(np.einsum("aij,aij->", kraus.conj(), kraus).real) / d_logical
    return Sector(label, weight, kraus, dkraus, basis, compressed_charge, shifts, native_dim)


def encode_sectors(code: U1Code, noise: LocalNoise, compress: bool = True,
                   min_weight: float = 1e-14) -> List[Sector]:
    """
    Sector decomposition of 𝒩∘ℰ with its θ-derivative ∂F = -iK(H_S W - W H_L).

    Args:
        code: Isometric code whose sites match the noise
        noise: Local noise
        compress: Compress each sector to the charge-resolved span of its Kraus images
        min_weight: Sectors with smaller probability mass are dropped

    Returns:
        List[Sector]: Orthogonal sectors in a fixed order
    """
    w = code.isometry
    if w is None:
        raise DomainError("Sector decomposition needs an isometric encoder")
    if code.n_sites != noise.n_sites or code.site_dim != noise.site_dim:
        raise DimensionError(f"Code has {code.n_sites} sites of dim {code.site_dim}, noise expects "
                             f"{noise.n_sites} of dim {noise.site_dim}")
    n, d, d_l = code.n_sites, code.site_dim, code.d_logical
    shape = [d] * n + [d_l]
    encoded = w.reshape(shape)
    derivative = (-1j * (code.physical.apply(w) - w @ code.logical.matrix())).reshape(shape)

    charged = _charges_consistent(code)
    shifts = None
    if charged:
        shifts, residual = noise.charge_shifts(code.site_charge)
        if residual > 1e-9:
            logger.debug(f"{noise.name} does not commute with the site charge (residual {residual:.2e})")
            shifts = None

    if noise.model == "single":
        sectors = _mixture_sectors(code, noise, encoded, derivative, charged, shifts, compress)
    else:
        sectors = _independent_sectors(code, noise, encoded, derivative, charged, shifts, compress)
    kept = [s for s in sectors if s.weight > min_weight]
    total = sum(s.weight for s in kept)
    if abs(total - 1) > 1e-8:
        logger.warning(f"Sector weights of {code.name} under {noise.name} sum to {total:.12f}")
    return kept


def _mixture_sectors(code, noise, encoded, derivative, charged, shifts, compress) -> List[Sector]:
    n, d, d_l = code.n_sites, code.site_dim, code.d_logical
    flag_index = np.flatnonzero(noise.flagged)
    inner_index = np.flatnonzero(noise.inner)
    others_charge = _site_charge_total(code.site_charge, n - 1) if charged else None
    sectors = []
    for site in range(n):
        if not len(flag_index):
            break
        scale = np.sqrt(noise.probs[site])
        native, tangent = [], []
        for alpha in flag_index:
            row = noise.local.kraus[alpha, d, :]
            native.append(scale * _contract_row(encoded, row, site).reshape(-1, d_l))
            tangent.append(scale * _contract_row(derivative, row, site).reshape(-1, d_l))
        sector_shifts = None if shifts is None else shifts[flag_index]
        sectors.append(_make_sector(f"erased[{site + 1}]", native, tangent, others_charge,
                                    sector_shifts, d_l, compress))
    if len(inner_index):
        native, tangent, bulk_shifts = [], [], []
        for site in range(n):
            scale = np.sqrt(noise.probs[site])
            for alpha in inner_index:
                op = noise.local.kraus[alpha, :d, :]
                native.append(scale * _apply_site(encoded, op, site).reshape(-1, d_l))
                tangent.append(scale * _apply_site(derivative, op, site).reshape(-1, d_l))
                bulk_shifts.append(0.0 if shifts is None else shifts[alpha])
        full_charge = code.physical.H if charged else None
        sectors.append(_make_sector("bulk", native, tangent, full_charge,
                                    None if shifts is None else np.array(bulk_shifts), d_l, compress))
    return sectors


def _independent_sectors(code, noise, encoded, derivative, charged, shifts, compress) -> List[Sector]:
    n, d, d_l = code.n_sites, code.site_dim, code.d_logical
    if noise.local.n_kraus ** n > INDEPENDENT_KRAUS_MAX:
        raise DimensionError(f"{noise.local.n_kraus}^{n} product Kraus operators exceed the enumeration cap")
    # each entry: (erased sites, encoded tensor, derivative tensor, shift)
    entries = [((), encoded, derivative, 0.0)]
    for site in range(n):
        next_entries = []
        for erased, tensor, dtensor, shift in entries:
            axis = site - len(erased)
            for alpha in range(noise.local.n_kraus):
                c = 0.0 if shifts is None else shifts[alpha]
                if noise.flagged[alpha]:
                    row = noise.local.kraus[alpha, d, :]
                    next_entries.append((erased + (site,), _contract_row(tensor, row, axis),
                                         _contract_row(dtensor, row, axis), shift + c))
                else:
                    op = noise.local.kraus[alpha, :d, :]
                    next_entries.append((erased, _apply_site(tensor, op, axis),
                                         _apply_site(dtensor, op, axis), shift + c))
        entries = next_entries

    grouped: Dict[Tuple[int, ...], List] = {}
    for erased, tensor, dtensor, shift in entries:
        grouped.setdefault(erased, []).append((tensor.reshape(-1, d_l), dtensor.reshape(-1, d_l), shift))
    sectors = []
    for erased in sorted(grouped, key=lambda e: (len(e), e)):
        items = grouped[erased]
        charge = _site_charge_total(code.site_charge, n - len(erased)) if charged else None
        label = "erased[" + ",".join(str(s + 1) for s in erased) + "]" if erased else "bulk"
        sector_shifts = None if shifts is None else np.array([item[2] for item in items])
        sectors.append(_make_sector(label, [item[0] for item in items], [item[1] for item in items],
                                    charge, sector_shifts, d_l, compress))
    return sectors


def encoded_channel(sectors: Sequence[Sector]) -> Channel:
    """𝒩∘ℰ on the direct sum of the compressed sector spaces, sectors in order"""
    total = sum(s.dim for s in sectors)
    blocks = []
    offset = 0
    for sector in sectors:
        for f in sector.kraus:
            padded = np.zeros((total, f.shape[1]), dtype=complex)
            padded[offset:offset + sector.dim] = f
            blocks.append(padded)
        offset += sector.dim
    return make_channel(np.stack(blocks), tol=1e-8)


def complete_recovery(partial: np.ndarray, dump: np.ndarray) -> np.ndarray:
    """
    Add |dump><e_j|√M, M = 1 - ΣR†R, to a trace non-increasing family of
    sector recovery operators (b, d_L, k)

    Raises:
        DomainError: ΣR†R exceeds the identity
    """
    partial = np.asarray(partial, dtype=complex)
    k = partial.shape[2]
    remainder = np.eye(k) - np.einsum("bji,bjk->ik", partial.conj(), partial)
    remainder = (remainder + remainder.conj().T) / 2
    smallest = float(np.linalg.eigvalsh(remainder)[0])
    if smallest < -1e-8:
        raise DomainError("Recovery operators are not trace non-increasing", smallest)
    root = herm_func(remainder, lambda values: np.sqrt(np.maximum(values, 0.0)), "sqrt")
    keep = np.linalg.norm(root, axis=1) > 1e-12
    completion = np.einsum("i,jk->jik", dump, root[keep])
    if not len(completion):
        return partial
    return np.concatenate([partial, completion], axis=0)


@dataclass
class SectorRecovery:
    """
    A recovery given blockwise: one trace-preserving Kraus family
    (b, d_L, k_s) per sector, acting on that sector's compressed space
    """
    kraus: List[np.ndarray]
    label: str = "recovery"

    def check(self, sectors: Sequence[Sector]) -> float:
        """Largest trace-preservation residual over sectors"""
        if len(sectors) != len(self.kraus):
            raise DimensionError(f"{len(self.kraus)} recovery blocks for {len(sectors)} sectors")
        residual = 0.0
        for sector, block in zip(sectors, self.kraus):
            if block.shape[2] != sector.dim:
                raise DimensionError(f"Recovery block for {sector.label} acts on {block.shape[2]}, sector has {sector.dim}")
            gram = np.einsum("bji,bjk->ik", block.conj(), block)
            residual = max(residual, float(np.max(np.abs(gram - np.eye(sector.dim)))))
        return residual

    def corrected_kraus(self, sectors: Sequence[Sector], code: Optional[U1Code] = None,
                        theta: Optional[float] = None) -> np.ndarray:
        """Kraus {R_b F̃_a} of ℛ∘𝒩∘ℰ, or of ℛ∘𝒩∘𝒰_{S,θ}∘ℰ∘𝒰_{L,θ}† when theta is given"""
        self.check(sectors)
        out = []
        for sector, block in zip(sectors, self.kraus):
            kraus = sector.kraus if theta is None else sector.rotated(code, theta)
            out.append(np.einsum("bij,ajk->baik", block, kraus).reshape(-1, block.shape[1], kraus.shape[2]))
        return np.concatenate(out, axis=0)

    def corrected_channel(self, sectors: Sequence[Sector]) -> Channel:
        return make_channel(self.corrected_kraus(sectors), tol=1e-7)

    def corrected_family(self, sectors: Sequence[Sector]) -> Tuple[np.ndarray, np.ndarray]:
        """Kraus and θ-derivatives at 0 of ℛ∘𝒩∘𝒰_{S,θ}∘ℰ∘𝒰_{L,θ}†"""
        self.check(sectors)
        kraus, dkraus = [], []
        for sector, block in zip(sectors, self.kraus):
            kraus.append(np.einsum("bij,ajk->baik", block, sector.kraus).reshape(-1, block.shape[1], sector.kraus.shape[2]))
            dkraus.append(np.einsum("bij,ajk->baik", block, sector.tangent).reshape(-1, block.shape[1], sector.kraus.shape[2]))
        return np.concatenate(kraus), np.concatenate(dkraus)


def default_dump(code: U1Code) -> np.ndarray:
    """|0_L>, the largest logical-charge eigenvector"""
    return extreme_logical_states(code)[0]


def pullback_recovery(sectors: Sequence[Sector], dump: np.ndarray) -> SectorRecovery:
    """R = F̃_a† per sector, scaled to be trace non-increasing, then completed"""
    blocks = []
    for sector in sectors:
        partial = np.conj(np.transpose(sector.kraus, (0, 2, 1)))
        gram = np.einsum("bji,bjk->ik", partial.conj(), partial)
        norm = float(np.linalg.eigvalsh((gram + gram.conj().T) / 2)[-1])
        if norm > 1:
            partial = partial / np.sqrt(norm)
        blocks.append(complete_recovery(partial, dump))
    return SectorRecovery(blocks, "pullback")
