#include "polarq/quantize.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace polarq {

namespace {

// Linked entry list plus an indexed min-heap of candidate costs. Entries
// keep their slot index for the lifetime of a reduction, so slot order
// equals position order and ties resolve to the smallest index by comparing
// slots. The heap tracks positions per entry, which keeps every stored
// candidate current (no lazy invalidation).
struct Workspace {
    struct Cand {
        double key;
        int id;
    };

    std::vector<double> p, x, fx;
    std::vector<int> prev, next;
    std::vector<Cand> heap;  // min on top; keys live in the heap for locality
    std::vector<int> pos;    // heap position per id, -1 when absent
    int head = 0;

    explicit Workspace(const MassDistribution& w, const Kernel& f) {
        const auto& e = w.entries();
        const int m = static_cast<int>(e.size());
        p.resize(m);
        x.resize(m);
        fx.resize(m);
        prev.resize(m);
        next.resize(m);
        pos.assign(m, -1);
        heap.reserve(m);
        for (int i = 0; i < m; ++i) {
            p[i] = e[i].p;
            x[i] = e[i].x;
            fx[i] = f(e[i].x);
            prev[i] = i - 1;
            next[i] = i + 1 < m ? i + 1 : -1;
        }
    }

    static bool before(const Cand& a, const Cand& b) {
        return a.key != b.key ? a.key < b.key : a.id < b.id;
    }

    void sift_up(int h) {
        const Cand c = heap[h];
        while (h > 0) {
            const int parent = (h - 1) / 2;
            if (!before(c, heap[parent]))
                break;
            heap[h] = heap[parent];
            pos[heap[h].id] = h;
            h = parent;
        }
        heap[h] = c;
        pos[c.id] = h;
    }

    void sift_down(int h) {
        const Cand c = heap[h];
        const int size = static_cast<int>(heap.size());
        for (;;) {
            int child = 2 * h + 1;
            if (child >= size)
                break;
            if (child + 1 < size && before(heap[child + 1], heap[child]))
                ++child;
            if (!before(heap[child], c))
                break;
            heap[h] = heap[child];
            pos[heap[h].id] = h;
            h = child;
        }
        heap[h] = c;
        pos[c.id] = h;
    }

    void heap_insert(int id, double cost) {
        heap.push_back({std::max(cost, 0.0), id});
        pos[id] = static_cast<int>(heap.size()) - 1;
        sift_up(pos[id]);
    }

    void heap_update(int id, double cost) {
        const int h = pos[id];
        assert(h >= 0);
        const double clamped = std::max(cost, 0.0);
        const double old = heap[h].key;
        heap[h].key = clamped;
        if (clamped < old)
            sift_up(h);
        else
            sift_down(h);
    }

    void heap_remove(int id) {
        const int h = pos[id];
        assert(h >= 0);
        const Cand last = heap.back();
        heap.pop_back();
        pos[id] = -1;
        if (last.id != id) {
            heap[h] = last;
            pos[last.id] = h;
            if (h > 0 && before(last, heap[(h - 1) / 2]))
                sift_up(h);
            else
                sift_down(h);
        }
    }

    // replaces the top element's key in place
    void heap_replace_top([[maybe_unused]] int id, double cost) {
        assert(heap.front().id == id);
        heap.front().key = std::max(cost, 0.0);
        sift_down(0);
    }

    void heap_pop_top() {
        pos[heap.front().id] = -1;
        const Cand last = heap.back();
        heap.pop_back();
        if (!heap.empty()) {
            heap[0] = last;
            pos[last.id] = 0;
            sift_down(0);
        }
    }

    int top() const { return heap.front().id; }
    double top_key() const { return heap.front().key; }

    void unlink(int i) {
        if (prev[i] >= 0)
            next[prev[i]] = next[i];
        if (next[i] >= 0)
            prev[next[i]] = prev[i];
        if (head == i)
            head = next[i];
    }

    std::vector<MassPoint> collect() const {
        std::vector<MassPoint> out;
        for (int i = head; i >= 0; i = next[i])
            out.push_back({p[i], x[i]});
        return out;
    }
};

void record_step(QuantizeReport& r, double cost) {
    ++r.steps;
    r.cumulative_loss += cost;
    r.max_step_loss = std::max(r.max_step_loss, cost);
}

double transport_cost(const Workspace& ws, int i) {
    return ws.p[i] * (ws.fx[ws.next[i]] - ws.fx[i]);
}

double merge_mean(const Workspace& ws, int i) {
    const int j = ws.next[i];
    // offset form keeps the mean inside [x_i, x_j] even when p*x underflows
    return ws.x[i] + ws.p[j] * (ws.x[j] - ws.x[i]) / (ws.p[i] + ws.p[j]);
}

double merge_cost(const Workspace& ws, const Kernel& f, int i) {
    const int j = ws.next[i];
    const double f_mean = f(merge_mean(ws, i));
    return ws.p[i] * (f_mean - ws.fx[i]) - ws.p[j] * (ws.fx[j] - f_mean);
}

double split_fraction(const Workspace& ws, int i) {
    const int l = ws.prev[i], r = ws.next[i];
    return std::clamp((ws.x[i] - ws.x[l]) / (ws.x[r] - ws.x[l]), 0.0, 1.0);
}

double split_cost(const Workspace& ws, int i) {
    const int l = ws.prev[i], r = ws.next[i];
    const double t = split_fraction(ws, i);
    return ws.p[i] * (ws.fx[i] - t * ws.fx[r] - (1.0 - t) * ws.fx[l]);
}

}  // namespace

QuantizeResult transport_degrade(const MassDistribution& w, std::size_t k, const Kernel& f) {
    if (k < 1)
        throw std::invalid_argument("transport_degrade: k must be at least 1");
    QuantizeReport report;
    if (w.size() <= k)
        return {w, report};

    Workspace ws(w, f);
    for (int i = 0; ws.next[i] >= 0; i = ws.next[i])
        ws.heap_insert(i, transport_cost(ws, i));

    for (std::size_t step = w.size() - k; step > 0; --step) {
        const int j = ws.top();
        record_step(report, ws.top_key());
        const int right = ws.next[j];
        const int left = ws.prev[j];
        ws.heap_pop_top();
        ws.p[right] += ws.p[j];
        ws.unlink(j);
        if (left >= 0)
            ws.heap_update(left, transport_cost(ws, left));
        if (ws.next[right] >= 0)
            ws.heap_update(right, transport_cost(ws, right));
    }
    return {MassDistribution::from_canonical_entries(ws.collect()), report};
}

QuantizeResult merge_degrade(const MassDistribution& w, std::size_t k, const Kernel& f) {
    if (k < 1)
        throw std::invalid_argument("merge_degrade: k must be at least 1");
    QuantizeReport report;
    if (w.size() <= k)
        return {w, report};

    Workspace ws(w, f);
    for (int i = 0; ws.next[i] >= 0; i = ws.next[i])
        ws.heap_insert(i, merge_cost(ws, f, i));

    for (std::size_t step = w.size() - k; step > 0; --step) {
        const int j = ws.top();
        record_step(report, ws.top_key());
        const int right = ws.next[j];

        // The merged mass reuses the left slot; its position stays strictly
        // between the old pair, so list order is untouched.
        if (ws.pos[right] >= 0)
            ws.heap_remove(right);
        const double mean = merge_mean(ws, j);
        ws.x[j] = std::clamp(mean, 0.0, 0.5);
        ws.fx[j] = f(ws.x[j]);
        ws.p[j] += ws.p[right];
        ws.unlink(right);

        if (ws.next[j] >= 0)
            ws.heap_replace_top(j, merge_cost(ws, f, j));
        else
            ws.heap_pop_top();
        const int left = ws.prev[j];
        if (left >= 0)
            ws.heap_update(left, merge_cost(ws, f, left));
    }
    return {MassDistribution::from_canonical_entries(ws.collect()), report};
}

QuantizeResult split_upgrade(const MassDistribution& w, std::size_t k, const Kernel& f) {
    if (k < 2)
        throw std::invalid_argument("split_upgrade: k must be at least 2");
    QuantizeReport report;
    report.upgrading = true;
    if (w.size() <= k)
        return {w, report};

    Workspace ws(w, f);
    for (int i = ws.next[ws.head]; ws.next[i] >= 0; i = ws.next[i])
        ws.heap_insert(i, split_cost(ws, i));

    for (std::size_t step = w.size() - k; step > 0; --step) {
        const int j = ws.top();
        record_step(report, ws.top_key());
        const int left = ws.prev[j], right = ws.next[j];
        ws.heap_pop_top();

        const double t = split_fraction(ws, j);
        ws.p[left] += (1.0 - t) * ws.p[j];
        ws.p[right] += t * ws.p[j];
        ws.unlink(j);

        if (ws.prev[left] >= 0)
            ws.heap_update(left, split_cost(ws, left));
        if (ws.next[right] >= 0)
            ws.heap_update(right, split_cost(ws, right));
    }
    return {MassDistribution::from_canonical_entries(ws.collect()), report};
}

StepBoundReport step_cost_bound_check(const MassDistribution& w, const Kernel& f) {
    const auto& e = w.entries();
    const std::size_t m = e.size();
    if (m < 2)
        throw std::invalid_argument("step_cost_bound_check: need at least 2 masses");

    StepBoundReport r;
    r.m = m;
    r.transport_bound = 1.0 / static_cast<double>((m - 1) * (m - 1));
    r.gap_bound = 1.0 / static_cast<double>(m * m);

    double min_transport = std::numeric_limits<double>::infinity();
    double max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double e1 = e[i].p * (f(e[i + 1].x) - f(e[i].x));
        min_transport = std::min(min_transport, e1);
        const double mean = e[i].x + e[i + 1].p * (e[i + 1].x - e[i].x) / (e[i].p + e[i + 1].p);
        const double e2 = e[i].p * (f(mean) - f(e[i].x)) - e[i + 1].p * (f(e[i + 1].x) - f(mean));
        max_excess = std::max(max_excess, e2 - e1);
    }
    r.min_transport_cost = min_transport;
    r.max_merge_excess = max_excess;
    // boundary gap: the last mass may still move toward 1/2
    const double boundary = e[m - 1].p * (f(0.5) - f(e[m - 1].x));
    r.min_gap_cost = std::min(min_transport, boundary);

    r.pass = r.min_transport_cost <= r.transport_bound + 1e-12 &&
             r.min_gap_cost <= r.gap_bound + 1e-12 && r.max_merge_excess <= 1e-12;
    return r;
}

DecayDiagnostic decay_diagnostic(std::span<const MassDistribution> inputs,
                                 std::span<const std::size_t> ks, const Kernel& f,
                                 QuantizerKind quantizer) {
    if (inputs.empty() || ks.empty())
        throw std::invalid_argument("decay_diagnostic: empty input or k sweep");

    DecayDiagnostic d;
    d.ks.assign(ks.begin(), ks.end());
    for (std::size_t k : d.ks) {
        double total = 0.0;
        for (const MassDistribution& w : inputs) {
            QuantizeResult qr;
            switch (quantizer) {
            case QuantizerKind::transport: qr = transport_degrade(w, k, f); break;
            case QuantizerKind::merge: qr = merge_degrade(w, k, f); break;
            case QuantizerKind::split: qr = split_upgrade(w, k, f); break;
            }
            total += qr.report.cumulative_loss;
        }
        d.losses.push_back(total / static_cast<double>(inputs.size()));
    }

    d.monotone_nonincreasing = true;
    for (std::size_t i = 0; i + 1 < d.losses.size(); ++i)
        if (d.losses[i + 1] > d.losses[i] + 1e-15)
            d.monotone_nonincreasing = false;

    // least-squares slope of log(loss) against log(k)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < d.ks.size(); ++i) {
        if (d.losses[i] <= 0.0)
            continue;
        const double lx = std::log(static_cast<double>(d.ks[i]));
        const double ly = std::log(d.losses[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++count;
    }
    const double denom = count * sxx - sx * sx;
    d.fitted_exponent = denom != 0.0 ? (count * sxy - sx * sy) / denom : 0.0;
    return d;
}

}  // namespace polarq
