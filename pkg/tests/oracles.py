"""Independent reference implementations used as test oracles.

Nothing here imports the code paths it checks beyond plain data types.
"""

import math


def heron_area(mesh, faces):
    pos = mesh.positions.tolist()
    total = 0.0
    for f in sorted(faces):
        p, q, r = (pos[v] for v in mesh.faces[f].tolist())
        a, b, c = math.dist(p, q), math.dist(q, r), math.dist(r, p)
        s = (a + b + c) / 2
        total += math.sqrt(max(s * (s - a) * (s - b) * (s - c), 0.0))
    return total


def face_edges(tri):
    return [tuple(sorted((tri[k], tri[(k + 1) % 3]))) for k in range(3)]


def components(mesh, faces, blocked):
    faces = set(faces)
    parent = {f: f for f in faces}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    owner = {}
    for f in sorted(faces):
        for e in face_edges(mesh.faces[f].tolist()):
            if e in blocked:
                continue
            if e in owner:
                ra, rb = find(f), find(owner[e])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            else:
                owner[e] = f
    groups = {}
    for f in faces:
        groups.setdefault(find(f), set()).add(f)
    return sorted(groups.values(), key=min)


def chain_edges(vertices):
    return {tuple(sorted(p)) for p in zip(vertices, vertices[1:])}


def chain_length(mesh, vertices):
    pos = mesh.positions.tolist()
    return sum(math.dist(pos[a], pos[b]) for a, b in zip(vertices, vertices[1:]))


def brute_force_order(mesh, chains, rtol=1e-9):
    """Loops-first / balance-first / largest-patch-first by exhaustive scoring.

    ``chains`` is a list of vertex tuples.  Returns the ordered list of tuples.
    """
    edge_faces = {}
    for f, tri in enumerate(mesh.faces.tolist()):
        for e in face_edges(tri):
            edge_faces.setdefault(e, []).append(f)

    loops = [c for c in chains if c[0] == c[-1]]
    opens = [c for c in chains if c[0] != c[-1]]
    patches = [frozenset(p) for p in components(mesh, range(mesh.n_faces), set())]
    out = []
    while patches:
        scored = [(heron_area(mesh, p), p) for p in patches]
        best_area = max(a for a, _ in scored)
        ties = [p for a, p in scored if a >= best_area - rtol * max(best_area, 1.0)]
        target = min(ties, key=min)
        patches.remove(target)
        scores = []
        for loop in loops:
            edges = chain_edges(loop)
            if not all(len(edge_faces[e]) == 2 and set(edge_faces[e]) <= target for e in edges):
                continue
            parts = components(mesh, target, edges)
            if len(parts) != 2:
                continue
            a1, a2 = heron_area(mesh, parts[0]), heron_area(mesh, parts[1])
            scores.append((min(a1, a2) / max(a1, a2), loop, parts))
        if not scores:
            continue
        top = max(s for s, _, _ in scores)
        _, loop, parts = min((s for s in scores if s[0] >= top - rtol * max(top, 1.0)), key=lambda s: s[1])
        out.append(loop)
        loops.remove(loop)
        patches.extend(frozenset(p) for p in parts)

    def by_length(cs):
        return sorted(cs, key=lambda c: (-round(chain_length(mesh, c), 9), c))

    return out + by_length(loops) + by_length(opens)


def finite_difference_check(params, loss_fn, n_random=2, eps=1e-6, seed=0):
    """Worst relative error between autograd and central differences per parameter tensor.

    Checks the largest-gradient entry of every tensor plus ``n_random`` random
    entries; ``params`` holds ``(name, tensor)`` pairs and ``loss_fn`` must be a pure
    function of them (double precision).
    """
    import torch

    params = list(params)
    for _, p in params:
        p.grad = None
    loss_fn().backward()
    gen = torch.Generator().manual_seed(seed)
    worst = {}
    for name, p in params:
        flat = p.data.view(-1)
        grad = p.grad.view(-1).clone() if p.grad is not None else torch.zeros_like(flat)
        idx = [int(grad.abs().argmax())]
        idx += torch.randint(len(flat), (n_random,), generator=gen).tolist()
        fd, ad = [], []
        with torch.no_grad():
            for i in idx:
                orig = flat[i].item()
                flat[i] = orig + eps
                up = loss_fn().item()
                flat[i] = orig - eps
                down = loss_fn().item()
                flat[i] = orig
                fd.append((up - down) / (2 * eps))
                ad.append(grad[i].item())
        diff = math.sqrt(sum((a - b) ** 2 for a, b in zip(fd, ad)))
        scale = max(math.sqrt(sum(a * a for a in fd)), math.sqrt(sum(b * b for b in ad)), 1e-8)
        worst[name] = diff / scale
    return worst
