# deterministic IRA (dual-diagonal parity) code, no 4-cycles
import random
def gen(n, m, wc, seed):
    k = n - m
    rnd = random.Random(seed)
    for attempt in range(1000):
        rows_of = []
        row_load = [0]*m
        pairs = set()
        ok = True
        for c in range(k):
            for t in range(200):
                cand = sorted(rnd.sample(range(m), wc))
                if any(abs(a-b) == 1 for a in cand for b in cand if a != b):
                    continue
                ps = {(a, b) for a in cand for b in cand if a < b}
                if ps & pairs:
                    continue
                if max(row_load[r] for r in cand) >= 4:
                    continue
                break
            else:
                ok = False
                break
            pairs |= ps
            for r in cand: row_load[r] += 1
            rows_of.append(cand)
        if not ok:
            continue
        for j in range(m):
            rows_of.append([j, j+1] if j+1 < m else [j])
        return rows_of
    raise SystemExit("failed")

def alist(n, m, cols):
    rows = [[] for _ in range(m)]
    for c, rs in enumerate(cols):
        for r in rs: rows[r].append(c)
    mc = max(len(c) for c in cols); mr = max(len(r) for r in rows)
    out = [f"{n} {m}", f"{mc} {mr}", " ".join(str(len(c)) for c in cols), " ".join(str(len(r)) for r in rows)]
    for c in cols: out.append(" ".join(str(x+1) for x in c + [-1]*(mc-len(c))))
    for r in rows: out.append(" ".join(str(x+1) for x in r + [-1]*(mr-len(r))))
    return "\n".join(out) + "\n"

cols = gen(672, 336, 3, 20200511)
import sys
open(sys.argv[1] if len(sys.argv) > 1 else "ira_672_r12.alist", "w").write(alist(672, 336, cols))
