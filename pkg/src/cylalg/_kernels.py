"""Hot numeric kernels: packed-bitset relation images, exhaustive triple scans,
exact colouring search, and basic-matrix enumeration.

Every kernel has two implementations: a numba @njit one and a pure-numpy
fallback.  The fallback is selected when numba is unavailable or when the
environment variable CYLALG_PURE_NUMPY is set to a non-empty value.  The
benchmark script exercises both paths explicitly via the PY_IMPL/JIT_IMPL
registries.

All binary relations here are square (atoms x atoms) and are stored as packed
uint64 rows: rows[a] is the bitmask of successors of atom a.
"""

import os

import numpy as np

_WORD = 64

PY_IMPL = {}
JIT_IMPL = {}

try:
    if os.environ.get("CYLALG_PURE_NUMPY"):
        raise ImportError("numba disabled by CYLALG_PURE_NUMPY")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the benchmark env flag
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def words_for(n_bits: int) -> int:
    return max(1, (n_bits + _WORD - 1) // _WORD)


def empty_words(n_bits: int) -> np.ndarray:
    return np.zeros(words_for(n_bits), dtype=np.uint64)


def full_words(n_bits: int) -> np.ndarray:
    w = np.full(words_for(n_bits), ~np.uint64(0), dtype=np.uint64)
    return mask_tail(w, n_bits)


def mask_tail(words: np.ndarray, n_bits: int) -> np.ndarray:
    """Zero out the bits above n_bits in the last word."""
    rem = n_bits % _WORD
    if rem and len(words):
        words[-1] &= np.uint64((1 << rem) - 1)
    return words


def pack_indices(ids, n_bits: int) -> np.ndarray:
    w = empty_words(n_bits)
    for i in ids:
        if not 0 <= i < n_bits:
            raise ValueError(f"atom id {i} out of range 0..{n_bits - 1}")
        w[i // _WORD] |= np.uint64(1 << (i % _WORD))
    return w


def unpack_indices(words: np.ndarray):
    out = []
    for wi, w in enumerate(words):
        w = int(w)
        while w:
            low = w & -w
            out.append(wi * _WORD + low.bit_length() - 1)
            w ^= low
    return out


def popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


def testbit(words: np.ndarray, i: int) -> bool:
    return bool((int(words[i // _WORD]) >> (i % _WORD)) & 1)


def _pack_bool_py(flags: np.ndarray) -> np.ndarray:
    n = len(flags)
    out = empty_words(n)
    idx = np.nonzero(flags)[0]
    if len(idx):
        np.bitwise_or.at(out, idx // _WORD, np.uint64(1) << (idx % _WORD).astype(np.uint64))
    return out


@njit(cache=True, inline="always")
def _bitidx(low):
    # low is a uint64 with exactly one bit set; log2 is exact on powers of two
    return int(np.log2(np.float64(low)))


# ---------------------------------------------------------------------------
# image_any: {a : rows[a] & x != 0}, the frame image of a packed set under a
# binary relation stored as per-atom successor masks.
# ---------------------------------------------------------------------------


def _image_any_py(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    hit = np.bitwise_and(rows, x[None, :]).any(axis=1)
    return _pack_bool_py(hit)


@njit(cache=True)
def _image_any_jit(rows, x):
    n, w = rows.shape
    out = np.zeros((n + 63) // 64, dtype=np.uint64)
    for a in range(n):
        for k in range(w):
            if rows[a, k] & x[k]:
                out[a // 64] |= np.uint64(1) << np.uint64(a % 64)
                break
    return out


PY_IMPL["image_any"] = _image_any_py
JIT_IMPL["image_any"] = _image_any_jit
image_any = _image_any_jit if HAVE_NUMBA else _image_any_py


# ---------------------------------------------------------------------------
# union_members: OR of rows[b] over the members b of a packed set.
# ---------------------------------------------------------------------------


def _union_members_py(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    ids = unpack_indices(x)
    if not ids:
        return np.zeros(rows.shape[1], dtype=np.uint64)
    return np.bitwise_or.reduce(rows[ids], axis=0)


@njit(cache=True)
def _union_members_jit(rows, x):
    w = rows.shape[1]
    out = np.zeros(w, dtype=np.uint64)
    for wi in range(len(x)):
        word = x[wi]
        while word:
            low = word & (~word + np.uint64(1))
            b = wi * 64 + _bitidx(low)
            for k in range(w):
                out[k] |= rows[b, k]
            word ^= low
    return out


PY_IMPL["union_members"] = _union_members_py
JIT_IMPL["union_members"] = _union_members_jit
union_members = _union_members_jit if HAVE_NUMBA else _union_members_py


# ---------------------------------------------------------------------------
# equiv_image: image under an equivalence relation given by class ids.
# ---------------------------------------------------------------------------


def _equiv_image_py(class_id: np.ndarray, class_masks: np.ndarray, x: np.ndarray) -> np.ndarray:
    ids = unpack_indices(x)
    if not ids:
        return np.zeros(class_masks.shape[1], dtype=np.uint64)
    hit = np.unique(class_id[ids])
    return np.bitwise_or.reduce(class_masks[hit], axis=0)


@njit(cache=True)
def _equiv_image_jit(class_id, class_masks, x):
    c, w = class_masks.shape
    seen = np.zeros(c, dtype=np.uint8)
    out = np.zeros(w, dtype=np.uint64)
    for wi in range(len(x)):
        word = x[wi]
        while word:
            low = word & (~word + np.uint64(1))
            b = wi * 64 + _bitidx(low)
            cid = class_id[b]
            if not seen[cid]:
                seen[cid] = 1
                for k in range(w):
                    out[k] |= class_masks[cid, k]
            word ^= low
    return out


PY_IMPL["equiv_image"] = _equiv_image_py
JIT_IMPL["equiv_image"] = _equiv_image_jit
equiv_image = _equiv_image_jit if HAVE_NUMBA else _equiv_image_py


# ---------------------------------------------------------------------------
# perm_image: image under a (partial) bijection stored as an int array,
# -1 meaning undefined.  Relation reading: b ~ perm[b].
# ---------------------------------------------------------------------------


def _perm_image_py(perm: np.ndarray, x: np.ndarray, n_bits: int) -> np.ndarray:
    ids = unpack_indices(x)
    tgt = [int(perm[b]) for b in ids if perm[b] >= 0]
    return pack_indices(tgt, n_bits)


@njit(cache=True)
def _perm_image_jit(perm, x, n_bits):
    nw = (n_bits + 63) // 64
    if nw < 1:
        nw = 1
    out = np.zeros(nw, dtype=np.uint64)
    for wi in range(len(x)):
        word = x[wi]
        while word:
            low = word & (~word + np.uint64(1))
            b = wi * 64 + _bitidx(low)
            t = perm[b]
            if t >= 0:
                out[t // 64] |= np.uint64(1) << np.uint64(t % 64)
            word ^= low
    return out


PY_IMPL["perm_image"] = _perm_image_py
JIT_IMPL["perm_image"] = _perm_image_jit
perm_image = _perm_image_jit if HAVE_NUMBA else _perm_image_py


# ---------------------------------------------------------------------------
# Composition-table associativity scan.  comp[b, c] is the packed set b;c.
# Returns the first triple (x, y, z) with (x;y);z != x;(y;z), or (-1,-1,-1).
# ---------------------------------------------------------------------------


def _assoc_scan_py(comp: np.ndarray) -> tuple:
    n = comp.shape[0]
    zero = np.zeros(comp.shape[2], dtype=np.uint64)
    for x in range(n):
        for y in range(n):
            xy = unpack_indices(comp[x, y])
            for z in range(n):
                left = np.bitwise_or.reduce(comp[xy, z], axis=0) if xy else zero
                yz = unpack_indices(comp[y, z])
                right = np.bitwise_or.reduce(comp[x, yz], axis=0) if yz else zero
                if not np.array_equal(left, right):
                    return (x, y, z)
    return (-1, -1, -1)


@njit(cache=True)
def _assoc_scan_jit(comp):
    n = comp.shape[0]
    w = comp.shape[2]
    left = np.zeros(w, dtype=np.uint64)
    right = np.zeros(w, dtype=np.uint64)
    for x in range(n):
        for y in range(n):
            for z in range(n):
                for k in range(w):
                    left[k] = np.uint64(0)
                    right[k] = np.uint64(0)
                for a in range(n):
                    if comp[x, y, a // 64] & (np.uint64(1) << np.uint64(a % 64)):
                        for k in range(w):
                            left[k] |= comp[a, z, k]
                for b in range(n):
                    if comp[y, z, b // 64] & (np.uint64(1) << np.uint64(b % 64)):
                        for k in range(w):
                            right[k] |= comp[x, b, k]
                for k in range(w):
                    if left[k] != right[k]:
                        return (x, y, z)
    return (-1, -1, -1)


PY_IMPL["assoc_scan"] = _assoc_scan_py
JIT_IMPL["assoc_scan"] = _assoc_scan_jit
assoc_scan = _assoc_scan_jit if HAVE_NUMBA else _assoc_scan_py


# ---------------------------------------------------------------------------
# Exact chromatic number: DSATUR-seeded branch and bound on <=64-node graphs
# stored as per-vertex adjacency bitmasks.
# ---------------------------------------------------------------------------


def _greedy_clique(adj, n):
    best = []
    order = sorted(range(n), key=lambda v: -bin(adj[v]).count("1"))
    for start in order[: min(n, 8)]:
        clique = [start]
        cand = adj[start]
        while cand:
            pick = -1
            bestdeg = -1
            m = cand
            while m:
                v = (m & -m).bit_length() - 1
                m &= m - 1
                d = bin(adj[v] & cand).count("1")
                if d > bestdeg:
                    bestdeg = d
                    pick = v
            clique.append(pick)
            cand &= adj[pick]
        if len(clique) > len(best):
            best = clique
    return best


def _greedy_dsatur(adj, n):
    colours = [-1] * n
    sat = [0] * n
    for _ in range(n):
        v = max(
            (u for u in range(n) if colours[u] < 0),
            key=lambda u: (bin(sat[u]).count("1"), bin(adj[u]).count("1"), -u),
        )
        c = 0
        while sat[v] >> c & 1:
            c += 1
        colours[v] = c
        m = adj[v]
        while m:
            u = (m & -m).bit_length() - 1
            m &= m - 1
            sat[u] |= 1 << c
    return colours


def _normalise(colouring):
    remap = {}
    out = []
    for c in colouring:
        c = int(c)
        if c not in remap:
            remap[c] = len(remap)
        out.append(remap[c])
    return out


def _chromatic_py(adj_list, n):
    """Exact chi via branch and bound; returns (chi, colouring list)."""
    if n == 0:
        return 0, []
    adj = [int(a) for a in adj_list]
    clique = _greedy_clique(adj, n)
    lb = len(clique)
    greedy = _greedy_dsatur(adj, n)
    ub = max(greedy) + 1
    best = list(greedy)
    if lb == ub:
        return ub, _normalise(best)

    rest = sorted((v for v in range(n) if v not in clique), key=lambda v: (-bin(adj[v]).count("1"), v))
    order = clique + rest
    assign = [-1] * n
    best_k = ub

    def search(pos, used):
        nonlocal best_k, best
        if used >= best_k or best_k <= lb:
            return
        if pos == n:
            best_k = used
            best = list(assign)
            return
        v = order[pos]
        forbidden = 0
        m = adj[v]
        while m:
            u = (m & -m).bit_length() - 1
            m &= m - 1
            if assign[u] >= 0:
                forbidden |= 1 << assign[u]
        for c in range(min(used + 1, best_k - 1)):
            if forbidden >> c & 1:
                continue
            assign[v] = c
            search(pos + 1, max(used, c + 1))
            assign[v] = -1

    search(0, 0)
    return best_k, _normalise(best)


@njit(cache=True)
def _chromatic_branch_jit(adj, n, order, lb, ub, greedy):
    best_k = ub
    best = greedy.copy()
    assign = np.full(n, -1, dtype=np.int64)
    choice = np.full(n, -1, dtype=np.int64)
    used = np.zeros(n + 1, dtype=np.int64)
    pos = 0
    while pos >= 0:
        if best_k <= lb:
            break
        if pos == n:
            best_k = used[pos]
            for i in range(n):
                best[i] = assign[i]
            pos -= 1
            if pos >= 0:
                assign[order[pos]] = -1
            continue
        v = order[pos]
        forbidden = np.uint64(0)
        m = adj[v]
        while m:
            low = m & (~m + np.uint64(1))
            u = _bitidx(low)
            m ^= low
            if assign[u] >= 0:
                forbidden |= np.uint64(1) << np.uint64(assign[u])
        top = used[pos] + 1
        if top > best_k - 1:
            top = best_k - 1
        advanced = False
        for c in range(choice[pos] + 1, top):
            if (forbidden >> np.uint64(c)) & np.uint64(1):
                continue
            assign[v] = c
            choice[pos] = c
            nu = used[pos]
            if c + 1 > nu:
                nu = c + 1
            used[pos + 1] = nu
            pos += 1
            if pos < n:
                choice[pos] = -1
            advanced = True
            break
        if not advanced:
            assign[v] = -1
            choice[pos] = -1
            pos -= 1
            if pos >= 0:
                assign[order[pos]] = -1
    return best_k, best


def _chromatic_jit_wrap(adj_list, n):
    if n == 0:
        return 0, []
    adj_py = [int(a) for a in adj_list]
    clique = _greedy_clique(adj_py, n)
    lb = len(clique)
    greedy = _greedy_dsatur(adj_py, n)
    ub = max(greedy) + 1
    if lb == ub:
        return ub, _normalise(greedy)
    rest = sorted((v for v in range(n) if v not in clique), key=lambda v: (-bin(adj_py[v]).count("1"), v))
    order = np.array(clique + rest, dtype=np.int64)
    chi, best = _chromatic_branch_jit(
        np.array(adj_py, dtype=np.uint64), n, order, lb, ub, np.array(greedy, dtype=np.int64)
    )
    return int(chi), _normalise(best)


PY_IMPL["chromatic"] = _chromatic_py
JIT_IMPL["chromatic"] = _chromatic_jit_wrap
chromatic = _chromatic_jit_wrap if HAVE_NUMBA else _chromatic_py


# ---------------------------------------------------------------------------
# Basic-matrix enumeration.  cons is an (N,N,N) bool cube: cons[a,b,c] iff the
# triple (a,b,c) is consistent (a below b;c).  Atoms are assumed self-converse
# (checked by the caller), so a matrix is determined by its strict upper
# triangle; every slot (i,j,k) of the coherence condition is verified.
# ---------------------------------------------------------------------------


def _mat3_ok(cons, diag, a, b, c):
    m = (
        (diag, a, b),
        (a, diag, c),
        (b, c, diag),
    )
    for i in range(3):
        for j in range(3):
            for k in range(3):
                if not cons[m[i][j], m[i][k], m[k][j]]:
                    return False
    return True


def _enum_matrices3_py(cons: np.ndarray, diag: int) -> np.ndarray:
    n = cons.shape[0]
    rows = []
    for a in range(n):
        for b in range(n):
            for c in np.nonzero(cons[a, b, :])[0]:
                if _mat3_ok(cons, diag, a, b, int(c)):
                    rows.append((a, b, int(c)))
    return np.array(sorted(rows), dtype=np.int64).reshape(-1, 3)


@njit(cache=True)
def _enum_matrices3_jit(cons, diag):
    n = cons.shape[0]
    buf = []
    m = np.empty((3, 3), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if not cons[a, b, c]:
                    continue
                m[0, 0] = diag
                m[1, 1] = diag
                m[2, 2] = diag
                m[0, 1] = a
                m[1, 0] = a
                m[0, 2] = b
                m[2, 0] = b
                m[1, 2] = c
                m[2, 1] = c
                ok = True
                for i in range(3):
                    if not ok:
                        break
                    for j in range(3):
                        if not ok:
                            break
                        for k in range(3):
                            if not cons[m[i, j], m[i, k], m[k, j]]:
                                ok = False
                                break
                if ok:
                    buf.append((a, b, c))
    out = np.empty((len(buf), 3), dtype=np.int64)
    for r in range(len(buf)):
        out[r, 0] = buf[r][0]
        out[r, 1] = buf[r][1]
        out[r, 2] = buf[r][2]
    return out


PY_IMPL["enum_matrices3"] = _enum_matrices3_py
JIT_IMPL["enum_matrices3"] = _enum_matrices3_jit
enum_matrices3 = _enum_matrices3_jit if HAVE_NUMBA else _enum_matrices3_py


def _mat4_ok(cons, diag, a01, a02, a03, a12, a13, a23):
    m = (
        (diag, a01, a02, a03),
        (a01, diag, a12, a13),
        (a02, a12, diag, a23),
        (a03, a13, a23, diag),
    )
    for i in range(4):
        for j in range(4):
            for k in range(4):
                if not cons[m[i][j], m[i][k], m[k][j]]:
                    return False
    return True


def _enum_matrices4_py(cons: np.ndarray, diag: int) -> np.ndarray:
    n = cons.shape[0]
    rows = []
    for a01 in range(n):
        for a02 in range(n):
            for a12 in np.nonzero(cons[a01, a02, :])[0]:
                a12 = int(a12)
                if not _mat3_ok(cons, diag, a01, a02, a12):
                    continue
                for a03 in range(n):
                    for a13 in np.nonzero(cons[a01, a03, :])[0]:
                        a13 = int(a13)
                        for a23 in np.nonzero(cons[a02, a03, :])[0]:
                            a23 = int(a23)
                            if not cons[a12, a13, a23]:
                                continue
                            if _mat4_ok(cons, diag, a01, a02, a03, a12, a13, a23):
                                rows.append((a01, a02, a03, a12, a13, a23))
    return np.array(sorted(rows), dtype=np.int64).reshape(-1, 6)


@njit(cache=True)
def _enum_matrices4_jit(cons, diag):
    n = cons.shape[0]
    buf = []
    m = np.empty((4, 4), dtype=np.int64)
    for i in range(4):
        m[i, i] = diag
    for a01 in range(n):
        for a02 in range(n):
            for a12 in range(n):
                if not (cons[a01, a02, a12] and cons[a02, a01, a12] and cons[a12, a01, a02]):
                    continue
                for a03 in range(n):
                    for a13 in range(n):
                        if not cons[a01, a03, a13]:
                            continue
                        for a23 in range(n):
                            if not (cons[a02, a03, a23] and cons[a12, a13, a23]):
                                continue
                            m[0, 1] = a01
                            m[1, 0] = a01
                            m[0, 2] = a02
                            m[2, 0] = a02
                            m[0, 3] = a03
                            m[3, 0] = a03
                            m[1, 2] = a12
                            m[2, 1] = a12
                            m[1, 3] = a13
                            m[3, 1] = a13
                            m[2, 3] = a23
                            m[3, 2] = a23
                            ok = True
                            for i in range(4):
                                if not ok:
                                    break
                                for j in range(4):
                                    if not ok:
                                        break
                                    for k in range(4):
                                        if not cons[m[i, j], m[i, k], m[k, j]]:
                                            ok = False
                                            break
                            if ok:
                                buf.append((a01, a02, a03, a12, a13, a23))
    out = np.empty((len(buf), 6), dtype=np.int64)
    for r in range(len(buf)):
        for c in range(6):
            out[r, c] = buf[r][c]
    return out


PY_IMPL["enum_matrices4"] = _enum_matrices4_py
JIT_IMPL["enum_matrices4"] = _enum_matrices4_jit
enum_matrices4 = _enum_matrices4_jit if HAVE_NUMBA else _enum_matrices4_py
