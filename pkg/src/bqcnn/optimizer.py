"""Genetic-algorithm training against the mean-absolute-error cost.

Every angle is stored as a ``bits_per_angle``-bit fixed-point integer over
``[0, 2 pi)``, most significant bit first; a chromosome is the concatenation.
Populations are handled as ``(N, length)`` uint8 arrays so a whole generation is
decoded and scored in one vectorized pass.
"""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .engine import classify_batch

TWO_PI = 2 * np.pi
WEIGHT_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class Chromosome:
    bits: np.ndarray
    bits_per_angle: int

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8).reshape(-1)
        if bits.size % self.bits_per_angle:
            raise ValueError(f"length {bits.size} is not a multiple of {self.bits_per_angle}")
        object.__setattr__(self, "bits", bits)

    @property
    def n_angles(self) -> int:
        return self.bits.size // self.bits_per_angle

    def __len__(self):
        return self.bits.size

    def __eq__(self, other):
        return (isinstance(other, Chromosome) and self.bits_per_angle == other.bits_per_angle
                and np.array_equal(self.bits, other.bits))

    def hex(self) -> str:
        return np.packbits(self.bits).tobytes().hex()

    @classmethod
    def from_hex(cls, text: str, length: int, bits_per_angle: int) -> "Chromosome":
        raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
        return cls(np.unpackbits(raw)[:length], bits_per_angle)

    def digest(self) -> str:
        return hashlib.sha256(self.bits.tobytes()).hexdigest()[:12]


def _weights(bits_per_angle: int) -> np.ndarray:
    return (1 << np.arange(bits_per_angle - 1, -1, -1)).astype(np.int64)


def encode_array(angles, bits_per_angle: int) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    levels = 1 << bits_per_angle
    ints = np.rint(np.mod(angles, TWO_PI) / TWO_PI * levels).astype(np.int64) % levels
    shifts = np.arange(bits_per_angle - 1, -1, -1)
    bits = (ints[..., None] >> shifts) & 1
    return bits.reshape(angles.shape[:-1] + (-1,)).astype(np.uint8)


def decode_array(bits, bits_per_angle: int) -> np.ndarray:
    bits = np.asarray(bits)
    grouped = bits.reshape(bits.shape[:-1] + (-1, bits_per_angle)).astype(np.int64)
    return TWO_PI * (grouped @ _weights(bits_per_angle)) / (1 << bits_per_angle)


def encode(params, bits_per_angle: int = 8) -> Chromosome:
    return Chromosome(encode_array(params, bits_per_angle), bits_per_angle)


def decode(chromosome: Chromosome) -> np.ndarray:
    return decode_array(chromosome.bits, chromosome.bits_per_angle)


def crossover(a: Chromosome, b: Chromosome, rng: np.random.Generator) -> tuple[Chromosome, Chromosome]:
    """Single-point crossover at a random angle boundary."""
    if len(a) != len(b) or a.bits_per_angle != b.bits_per_angle:
        raise ValueError("parents differ in length or encoding")
    if a.n_angles < 2:
        return a, b
    k = int(rng.integers(1, a.n_angles)) * a.bits_per_angle
    return (Chromosome(np.concatenate([a.bits[:k], b.bits[k:]]), a.bits_per_angle),
            Chromosome(np.concatenate([b.bits[:k], a.bits[k:]]), a.bits_per_angle))


def mutate(c: Chromosome, rate: float, rng: np.random.Generator) -> Chromosome:
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"mutation rate {rate} outside [0, 1]")
    flips = rng.random(len(c)) < rate
    return Chromosome(c.bits ^ flips.astype(np.uint8), c.bits_per_angle)


@dataclass
class GAConfig:
    population_size: int = 256
    elite_fraction: float = 0.1
    mutation_rate: float | None = None  # None -> 1 / chromosome length
    bits_per_angle: int = 8
    generations: int = 500
    seed: int = 0
    cost_mode: str = "exact"  # or "shots"
    shots: int = 512
    workers: int = 1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not 0.0 <= self.elite_fraction < 1.0:
            raise ValueError("elite_fraction must lie in [0, 1)")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.bits_per_angle < 1:
            raise ValueError("bits_per_angle must be >= 1")
        if self.cost_mode not in ("exact", "shots"):
            raise ValueError(f"unknown cost_mode {self.cost_mode!r}")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")

    def n_elite(self) -> int:
        return math.ceil(self.elite_fraction * self.population_size)

    def rate_for(self, length: int) -> float:
        return 1.0 / length if self.mutation_rate is None else self.mutation_rate

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(repr(sorted(self.to_dict().items())).encode()).hexdigest()[:12]


def mae_cost(circuit, params, dataset, shots: int | None = None, rng: np.random.Generator | None = None):
    """Mean ``|label - p1|``; batched ``params`` give one cost per row.

    ``circuit`` is a :class:`BranchingCircuit` or any object with
    ``classify(params, states)`` and ``n_qubits``/``n_params``.

    With ``shots``, ``p1`` is replaced by a binomial estimate from ``rng``.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if hasattr(circuit, "classify"):
        p1 = circuit.classify(params, dataset.states())
    else:
        p1 = classify_batch(circuit, params, dataset.states())
    if shots is not None:
        p1 = rng.binomial(shots, np.clip(p1, 0.0, 1.0)) / shots
    return np.mean(np.abs(dataset.labels() - p1), axis=-1)


def evolve(population: np.ndarray, costs, config: GAConfig, rng: np.random.Generator) -> np.ndarray:
    """Next generation: elites carried over sorted by cost, the rest bred from
    parents drawn with probability proportional to ``1 - cost``."""
    population = np.asarray(population, dtype=np.uint8)
    costs = np.asarray(costs, dtype=float)
    n, length = population.shape
    if n != config.population_size:
        raise ValueError(f"population has {n} members, config says {config.population_size}")
    order = np.argsort(costs, kind="stable")
    n_elite = min(config.n_elite(), n)
    elites = population[order[:n_elite]]
    n_children = n - n_elite
    if n_children == 0:
        return elites.copy()

    weights = np.maximum(1.0 - costs, WEIGHT_FLOOR)
    probs = weights / weights.sum()
    n_pairs = (n_children + 1) // 2
    parents = rng.choice(n, size=(n_pairs, 2), p=probs)
    n_angles = length // config.bits_per_angle
    if n_angles >= 2:
        cuts = rng.integers(1, n_angles, size=n_pairs) * config.bits_per_angle
    else:
        cuts = np.zeros(n_pairs, dtype=int)
    a = population[parents[:, 0]]
    b = population[parents[:, 1]]
    left = np.arange(length)[None, :] < cuts[:, None]
    kids = np.empty((2 * n_pairs, length), dtype=np.uint8)
    kids[0::2] = np.where(left, a, b)
    kids[1::2] = np.where(left, b, a)
    kids = kids[:n_children]
    flips = rng.random(kids.shape) < config.rate_for(length)
    kids ^= flips.astype(np.uint8)
    return np.vstack([elites, kids])


@dataclass
class TrainingHistory:
    rows: list = field(default_factory=list)
    best_chromosome: Chromosome | None = None

    def record(self, generation, costs, best_bits):
        best = float(np.min(costs))
        self.rows.append({
            "generation": generation,
            "best_cost": best,
            "mean_cost": float(np.mean(costs)),
            "best_correctness": 1.0 - best,
            "best_digest": hashlib.sha256(best_bits.tobytes()).hexdigest()[:12],
        })

    @property
    def best_costs(self) -> np.ndarray:
        return np.array([r["best_cost"] for r in self.rows])

    @property
    def final_correctness(self) -> float:
        return self.rows[-1]["best_correctness"]

    def write_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.DictWriter(fh, fieldnames=["generation", "best_cost", "mean_cost", "best_correctness"],
                                    extrasaction="ignore", lineterminator="\n")
            writer.writeheader()
            for r in self.rows:
                writer.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})


def _population_costs(circuit, dataset, population, config: GAConfig, generation: int) -> np.ndarray:
    params = decode_array(population, config.bits_per_angle)
    if config.cost_mode == "shots":
        out = np.empty(len(population))
        for i, row in enumerate(params):
            rng = np.random.default_rng([config.seed, 1, generation, i])
            out[i] = mae_cost(circuit, row, dataset, shots=config.shots, rng=rng)
        return out
    if config.workers <= 1:
        return mae_cost(circuit, params, dataset)
    chunks = np.array_split(np.arange(len(params)), config.workers)
    with ThreadPoolExecutor(config.workers) as pool:
        parts = pool.map(lambda idx: mae_cost(circuit, params[idx], dataset), chunks)
    return np.concatenate(list(parts))


def train(circuit, dataset, config: GAConfig, progress=None):
    """Run ``config.generations`` generations; returns (best-ever parameters, history).

    Carried-over elites keep their cached cost, so the recorded best cost never
    increases even when costs are shot estimates.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if dataset.n_qubits != circuit.n_qubits:
        raise ValueError(f"dataset has {dataset.n_qubits} qubits, circuit expects {circuit.n_qubits}")
    length = circuit.n_params * config.bits_per_angle
    init_rng = np.random.default_rng([config.seed, 2])
    population = init_rng.integers(0, 2, size=(config.population_size, length), dtype=np.uint8)
    history = TrainingHistory()
    n_elite = min(config.n_elite(), config.population_size)
    costs = _population_costs(circuit, dataset, population, config, 0)
    best_bits, best_cost = None, np.inf
    for gen in range(config.generations):
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost, best_bits = float(costs[i]), population[i].copy()
        history.record(gen, costs, population[i])
        if progress is not None:
            progress(gen, history.rows[-1])
        if gen == config.generations - 1:
            break
        rng = np.random.default_rng([config.seed, 0, gen])
        order = np.argsort(costs, kind="stable")
        elite_costs = costs[order[:n_elite]]
        population = evolve(population, costs, config, rng)
        fresh = _population_costs(circuit, dataset, population[n_elite:], config, gen + 1) \
            if n_elite < len(population) else np.empty(0)
        costs = np.concatenate([elite_costs, fresh])
    history.best_chromosome = Chromosome(best_bits, config.bits_per_angle)
    return decode(history.best_chromosome), history
