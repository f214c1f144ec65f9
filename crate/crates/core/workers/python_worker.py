# Evaluation worker for full-Python candidates of the built-in tasks.
# Reads one JSON request line on stdin, writes one JSON response line.
import json
import math
import sys

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def next_f64(self):
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_in(self, lo, hi):
        return lo + self.next_u64() % (hi - lo + 1)


def obp_instances(seed, count):
    rng = SplitMix64(seed)
    return [(100, [rng.next_in(1, 100) for _ in range(500)]) for _ in range(count)]


def obp_score(fn, instances):
    total = 0.0
    for capacity, items in instances:
        bins = []
        for item in items:
            best = None
            for i, rem in enumerate(bins):
                if rem < item:
                    continue
                s = float(fn(float(item), float(rem)))
                if best is None or s > best[1]:
                    best = (i, s)
            if best is None:
                bins.append(capacity - item)
            else:
                bins[best[0]] -= item
        lower = -(-sum(items) // capacity)
        total += len(bins) / lower - 1.0
    return total / len(instances)


def tsp_instances(seed, count):
    rng = SplitMix64(seed)
    out = []
    for _ in range(count):
        coords = []
        for _ in range(50):
            x = rng.next_f64()
            y = rng.next_f64()
            coords.append((x, y))
        dist = [[math.hypot(a[0] - b[0], a[1] - b[1]) for b in coords] for a in coords]
        out.append(dist)
    return out


def tsp_score(fn, instances):
    total = 0.0
    for dist in instances:
        n = len(dist)
        visited = [False] * n
        visited[0] = True
        tour = [0]
        current = 0
        for step in range(1, n):
            remaining = n - step
            row = dist[current]
            mean = sum(row[j] for j in range(n) if not visited[j]) / remaining
            best = None
            for j in range(n):
                if visited[j]:
                    continue
                s = float(fn(row[j], dist[j][0], float(remaining), mean))
                if best is None or s > best[1]:
                    best = (j, s)
            visited[best[0]] = True
            tour.append(best[0])
            current = best[0]
        length = sum(dist[tour[i]][tour[(i + 1) % n]] for i in range(n))
        total += length
    return total / len(instances)


def sr_rows(seed, count):
    rng = SplitMix64(seed)
    rows = []
    for _ in range(count):
        b = 0.5 + 11.5 * rng.next_f64()
        s = 5.0 * rng.next_f64()
        rows.append(((b, s), 0.9 * b * (1.0 - b / 12.0) * s / (s + 1.5)))
    return rows


def sr_score(fn, rows):
    sq = 0.0
    for x, y in rows:
        r = float(fn(*x)) - y
        sq += r * r
    return math.sqrt(sq / len(rows))


TASKS = {
    "obp": ("priority", obp_instances, obp_score),
    "tsp_construct": ("select_next", tsp_instances, tsp_score),
    "sr_growth": ("growth_rate", sr_rows, sr_score),
}


def reply(status, scores=(), detail=""):
    sys.stdout.write(json.dumps({"status": status, "scores": list(scores), "detail": detail[:4000]}) + "\n")
    sys.stdout.flush()


def main():
    req = json.loads(sys.stdin.readline())
    task = TASKS.get(req["task_id"])
    if task is None:
        reply("error", detail="unknown task " + req["task_id"])
        return
    name, make, score = task
    scope = {"math": math, "__name__": "candidate"}
    try:
        exec(compile(req["candidate_code"], "<candidate>", "exec"), scope)
    except SyntaxError as e:
        reply("parse_error", detail="SyntaxError: %s" % e)
        return
    except Exception as e:
        reply("error", detail="%s: %s" % (type(e).__name__, e))
        return
    fn = scope.get(name)
    if not callable(fn):
        reply("parse_error", detail="function %s not defined" % name)
        return
    try:
        value = score(fn, make(req["instance_seed"], req["instance_count"]))
    except Exception as e:
        reply("error", detail="%s: %s" % (type(e).__name__, e))
        return
    if not math.isfinite(value):
        reply("error", detail="non-finite score %r" % value)
        return
    reply("ok", [value])


if __name__ == "__main__":
    main()
