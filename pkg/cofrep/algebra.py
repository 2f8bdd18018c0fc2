import itertools
from dataclasses import dataclass
from typing import Any, Callable, List, Sequence, Tuple

import numpy as np


class DimensionMismatch(ValueError):
    """Raised when the lengths or shapes of operands do not fit."""


class FieldMismatch(ValueError):
    """Raised when operands live over different prime fields."""


class NotPrime(ValueError):
    """Raised when a field is requested for a composite modulus."""


class NotSurjective(ValueError):
    """Raised when a section is requested for a non-surjective matrix."""


class SizeGuardExceeded(ValueError):
    """Raised when an enumeration would exceed its size guard.

    Parameters
    ----------
    required : int
        The number of elements the enumeration would produce.
    limit : int
        The guard that was exceeded.
    dim : int, optional
        The dimension at which the guard was hit.
    """

    def __init__(self, required: int, limit: int, dim: int | None = None) -> None:
        self.required, self.limit, self.dim = required, limit, dim
        where = "" if dim is None else f" in dimension {dim}"
        super().__init__(
            f"Enumeration{where} requires {required} elements (limit {limit})."
        )


class MalformedEntry(ValueError):
    """Raised when serialised input holds a non-integer or a non-residue."""


def as_int(value: Any, what: str = "entry") -> int:
    """Reads an exact integer; booleans, floats and strings are rejected."""
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, (int, np.integer)):
        raise MalformedEntry(f"The {what} {value!r} is not an integer.")
    return int(value)


def as_index(value: Any, what: str = "dimension") -> int:
    """Reads a nonnegative integer."""
    index = as_int(value, what)
    if index < 0:
        raise MalformedEntry(f"The {what} {index} is negative.")
    return index


def is_prime(number: int) -> bool:
    """Checks primality by trial division."""
    if number < 2:
        return False

    divisor = 2
    while divisor * divisor <= number:
        if number % divisor == 0:
            return False
        divisor += 1
    return True


@dataclass(frozen=True)
class PrimeField:
    """The prime field Z/p."""

    p: int

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise NotPrime(f"The modulus {self.p} is not prime.")

    def reduce(self, values: np.ndarray | int) -> np.ndarray | int:
        """Reduces values to their canonical residues in [0, p)."""
        return np.mod(values, self.p)

    def residue(self, value: Any) -> int:
        """Reads an exact residue in [0, p) without reducing it."""
        entry = as_int(value)
        if not 0 <= entry < self.p:
            raise MalformedEntry(f"The entry {entry} is not a residue mod {self.p}.")
        return entry

    def inverse(self, value: int) -> int:
        """The multiplicative inverse of a non-zero residue."""
        if value % self.p == 0:
            raise ZeroDivisionError(f"0 has no inverse in Z/{self.p}.")
        return pow(int(value), -1, self.p)

    def __str__(self) -> str:
        return f"Z/{self.p}"


def check_fields(*fields: PrimeField) -> PrimeField:
    """Makes sure all operands share one field."""
    first = fields[0]
    if any(field != first for field in fields[1:]):
        raise FieldMismatch(
            f"Fields differ: {', '.join(str(field) for field in fields)}."
        )
    return first


@dataclass(frozen=True)
class Vector:
    """A vector over a prime field with canonical residues as entries."""

    field: PrimeField
    entries: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "entries", tuple(int(entry) % self.field.p for entry in self.entries)
        )

    @classmethod
    def zeros(cls, field: PrimeField, length: int) -> "Vector":
        return cls(field, (0,) * length)

    @classmethod
    def unit(cls, field: PrimeField, length: int, index: int) -> "Vector":
        """The standard basis vector e_index."""
        return cls(field, tuple(int(position == index) for position in range(length)))

    @classmethod
    def from_array(cls, field: PrimeField, array: np.ndarray) -> "Vector":
        return cls(field, tuple(int(entry) for entry in np.ravel(array)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def _check(self, other: "Vector") -> None:
        check_fields(self.field, other.field)
        if len(self) != len(other):
            raise DimensionMismatch(
                f"Vector lengths differ: {len(self)} and {len(other)}."
            )

    def __add__(self, other: "Vector") -> "Vector":
        self._check(other)
        return Vector(self.field, tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: "Vector") -> "Vector":
        self._check(other)
        return Vector(self.field, tuple(a - b for a, b in zip(self, other)))

    def __neg__(self) -> "Vector":
        return Vector(self.field, tuple(-a for a in self))

    def __mul__(self, scalar: int) -> "Vector":
        return Vector(self.field, tuple(scalar * a for a in self))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not any(self.entries)

    def to_json(self) -> List[int]:
        return list(self.entries)

    def __str__(self) -> str:
        return f"({', '.join(map(str, self.entries))})"


def concat(*vectors: Vector) -> Vector:
    """Concatenates vectors over one field."""
    field = check_fields(*(vector.field for vector in vectors))
    return Vector(field, tuple(entry for vector in vectors for entry in vector))


def random_vector(field: PrimeField, length: int, rng: np.random.Generator) -> Vector:
    """A uniformly random vector."""
    return Vector.from_array(field, rng.integers(0, field.p, size=length))


@dataclass(frozen=True, eq=False)
class Matrix:
    """A (rows x cols)-matrix over a prime field, stored row-major.

    Zero-row and zero-column matrices are permitted.
    """

    field: PrimeField
    array: np.ndarray

    def __post_init__(self) -> None:
        array = np.array(self.array, dtype=np.int64)
        if array.ndim != 2:
            raise DimensionMismatch(f"A matrix needs two axes, got {array.ndim}.")
        array = self.field.reduce(array)
        array.setflags(write=False)
        object.__setattr__(self, "array", array)

    @classmethod
    def zeros(cls, field: PrimeField, rows: int, cols: int) -> "Matrix":
        return cls(field, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, field: PrimeField, size: int) -> "Matrix":
        return cls(field, np.eye(size, dtype=np.int64))

    @classmethod
    def from_rows(
        cls, field: PrimeField, rows: Sequence[Sequence[int]], cols: int | None = None
    ) -> "Matrix":
        """Builds a matrix from nested rows; ``cols`` fixes the shape of empty input."""
        if len(rows) == 0:
            return cls.zeros(field, 0, 0 if cols is None else cols)

        lengths = {len(row) for row in rows}
        if len(lengths) != 1 or (cols is not None and lengths != {cols}):
            raise DimensionMismatch(f"Ragged or mis-sized rows: {sorted(lengths)}.")
        return cls(field, np.array(rows, dtype=np.int64).reshape(len(rows), -1))

    @classmethod
    def from_json(
        cls, field: PrimeField, rows: Sequence[Sequence[Any]], cols: int | None = None
    ) -> "Matrix":
        """Reads row-major residues, rejecting anything but exact entries in [0, p).

        Raises
        ------
        MalformedEntry
            If an entry is not an integer or lies outside [0, p).
        """
        entries = [[field.residue(entry) for entry in row] for row in rows]
        return cls.from_rows(field, entries, cols)

    @classmethod
    def from_columns(
        cls, field: PrimeField, columns: Sequence[Vector], rows: int
    ) -> "Matrix":
        if any(len(column) != rows for column in columns):
            raise DimensionMismatch(f"All columns must have length {rows}.")
        array = np.zeros((rows, len(columns)), dtype=np.int64)
        for index, column in enumerate(columns):
            array[:, index] = column.entries
        return cls(field, array)

    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def cols(self) -> int:
        return self.array.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.array.shape

    def column(self, index: int) -> Vector:
        return Vector.from_array(self.field, self.array[:, index])

    def columns(self, start: int = 0, stop: int | None = None) -> "Matrix":
        return Matrix(self.field, self.array[:, start:stop])

    def transpose(self) -> "Matrix":
        return Matrix(self.field, self.array.T)

    def is_zero(self) -> bool:
        return not self.array.any()

    def __matmul__(self, other: "Matrix") -> "Matrix":
        check_fields(self.field, other.field)
        if self.cols != other.rows:
            raise DimensionMismatch(
                f"Cannot compose {self.shape} with {other.shape} matrices."
            )
        return Matrix(self.field, self.array @ other.array)

    def __add__(self, other: "Matrix") -> "Matrix":
        check_fields(self.field, other.field)
        if self.shape != other.shape:
            raise DimensionMismatch(f"Shapes differ: {self.shape} and {other.shape}.")
        return Matrix(self.field, self.array + other.array)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return (
            self.field == other.field
            and self.shape == other.shape
            and np.array_equal(self.array, other.array)
        )

    def __hash__(self) -> int:
        return hash((self.field, self.shape, self.array.tobytes()))

    def to_json(self) -> List[List[int]]:
        return self.array.tolist()

    def __str__(self) -> str:
        return str(self.array)


def vstack(*matrices: Matrix) -> Matrix:
    """Stacks matrices with equal column counts on top of each other."""
    field = check_fields(*(matrix.field for matrix in matrices))
    if len({matrix.cols for matrix in matrices}) > 1:
        raise DimensionMismatch("Stacked matrices need equal column counts.")
    return Matrix(field, np.vstack([matrix.array for matrix in matrices]))


def hstack(*matrices: Matrix) -> Matrix:
    """Places matrices with equal row counts side by side."""
    field = check_fields(*(matrix.field for matrix in matrices))
    if len({matrix.rows for matrix in matrices}) > 1:
        raise DimensionMismatch("Joined matrices need equal row counts.")
    return Matrix(field, np.hstack([matrix.array for matrix in matrices]))


def mat_apply(matrix: Matrix, vector: Vector) -> Vector:
    """The matrix-vector product mod p."""
    check_fields(matrix.field, vector.field)
    if len(vector) != matrix.cols:
        raise DimensionMismatch(
            f"Vector of length {len(vector)} does not fit a {matrix.shape} matrix."
        )
    return Vector.from_array(matrix.field, matrix.array @ vector.array)


def rref(matrix: Matrix) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form with leftmost pivots.

    Returns
    -------
    reduced : numpy.ndarray
        The reduced matrix.
    pivots : list of int
        The pivot columns, one per non-zero row of ``reduced``.
    """
    field = matrix.field
    reduced = matrix.array.copy()
    nrows, ncols = reduced.shape
    pivots, row = [], 0
    for col in range(ncols):
        if row >= nrows:
            break

        candidates = np.nonzero(reduced[row:, col])[0]
        if candidates.size == 0:
            continue

        pivot = row + int(candidates[0])
        if pivot != row:
            reduced[[row, pivot]] = reduced[[pivot, row]]

        reduced[row] = field.reduce(reduced[row] * field.inverse(reduced[row, col]))
        others = np.nonzero(reduced[:, col])[0]
        others = others[others != row]
        if others.size:
            reduced[others] = field.reduce(
                reduced[others] - np.outer(reduced[others, col], reduced[row])
            )
        pivots.append(col)
        row += 1
    return reduced, pivots


def rank(matrix: Matrix) -> int:
    return len(rref(matrix)[1])


def kernel_basis(matrix: Matrix) -> List[Vector]:
    """A canonical basis of {v : matrix . v = 0}, one vector per free column."""
    reduced, pivots = rref(matrix)
    field, basis = matrix.field, []
    for free in (col for col in range(matrix.cols) if col not in pivots):
        entries = np.zeros(matrix.cols, dtype=np.int64)
        entries[free] = 1
        for row, pivot in enumerate(pivots):
            entries[pivot] = -reduced[row, free]
        basis.append(Vector.from_array(field, entries))
    return basis


def solve(matrix: Matrix, rhs: Vector) -> Vector | None:
    """Some v with matrix . v = rhs, or None if there is none.

    The solution is obtained by back-substitution from the reduced form with
    every free variable set to zero, so it depends linearly on ``rhs``.
    """
    check_fields(matrix.field, rhs.field)
    if len(rhs) != matrix.rows:
        raise DimensionMismatch(
            f"Right-hand side of length {len(rhs)} does not fit a {matrix.shape} matrix."
        )

    augmented = hstack(matrix, Matrix(matrix.field, rhs.array.reshape(-1, 1)))
    reduced, pivots = rref(augmented)
    if matrix.cols in pivots:
        return None

    entries = np.zeros(matrix.cols, dtype=np.int64)
    for row, pivot in enumerate(pivots):
        entries[pivot] = reduced[row, -1]
    return Vector.from_array(matrix.field, entries)


def section_of_surjection(matrix: Matrix) -> Callable[[Vector], Vector]:
    """A linear right inverse s of a surjective matrix, m . s(b) = b.

    The section sends each standard basis vector to its ``solve`` solution.

    Raises
    ------
    NotSurjective
        If the rank is smaller than the number of rows.
    """
    if rank(matrix) < matrix.rows:
        raise NotSurjective(
            f"A {matrix.shape} matrix of rank {rank(matrix)} is not surjective."
        )

    section = Matrix.from_columns(
        matrix.field,
        [
            solve(matrix, Vector.unit(matrix.field, matrix.rows, index))
            for index in range(matrix.rows)
        ],
        matrix.cols,
    )
    return lambda vector: mat_apply(section, vector)


def enumerate_affine(
    basis: Sequence[Vector], offset: Vector, limit: int
) -> List[Vector]:
    """All vectors offset + span(basis) in lexicographic coefficient order.

    Raises
    ------
    SizeGuardExceeded
        If p^len(basis) exceeds ``limit``.
    """
    field = check_fields(offset.field, *(vector.field for vector in basis))
    if any(len(vector) != len(offset) for vector in basis):
        raise DimensionMismatch("Basis vectors and offset must share their length.")

    count = field.p ** len(basis)
    if count > limit:
        raise SizeGuardExceeded(count, limit)

    if not basis:
        return [offset]

    coefficients = np.array(
        list(itertools.product(range(field.p), repeat=len(basis))), dtype=np.int64
    )
    span = np.array([vector.entries for vector in basis], dtype=np.int64)
    points = field.reduce(coefficients @ span + offset.array)
    vectors = dict.fromkeys(Vector.from_array(field, point) for point in points)
    return list(vectors)
