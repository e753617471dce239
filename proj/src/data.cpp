#include "crowdagg/data.hpp"

#include <algorithm>
#include <unordered_set>

#include "crowdagg/csv.hpp"
#include "crowdagg/error.hpp"
#include "crowdagg/rng.hpp"

namespace crowdagg {

namespace {

// (task, worker) key for duplicate detection.
std::uint64_t pair_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

}  // namespace

std::string canonical_task_name(int idx) { return "t" + std::to_string(idx + 1); }
std::string canonical_worker_name(int idx) { return "w" + std::to_string(idx + 1); }

AnswerMatrix AnswerMatrix::build(int k, int n_tasks, int n_workers,
                                 std::vector<AnswerEntry> entries) {
    std::vector<std::string> task_names(static_cast<size_t>(n_tasks));
    std::vector<std::string> worker_names(static_cast<size_t>(n_workers));
    for (int i = 0; i < n_tasks; ++i) task_names[static_cast<size_t>(i)] = canonical_task_name(i);
    for (int j = 0; j < n_workers; ++j)
        worker_names[static_cast<size_t>(j)] = canonical_worker_name(j);
    return build(k, std::move(task_names), std::move(worker_names), std::move(entries));
}

AnswerMatrix AnswerMatrix::build(int k, std::vector<std::string> task_names,
                                 std::vector<std::string> worker_names,
                                 std::vector<AnswerEntry> entries) {
    if (k < 2) throw ValidationError("category count must be at least 2, got " + std::to_string(k));
    if (entries.empty()) throw ValidationError("answer matrix has no entries");

    AnswerMatrix m;
    m.k_ = k;
    m.task_names_ = std::move(task_names);
    m.worker_names_ = std::move(worker_names);
    const int n_tasks = m.n_tasks();
    const int n_workers = m.n_workers();

    std::sort(entries.begin(), entries.end(), [](const AnswerEntry& a, const AnswerEntry& b) {
        return a.task != b.task ? a.task < b.task : a.worker < b.worker;
    });
    for (size_t i = 0; i < entries.size(); ++i) {
        const AnswerEntry& e = entries[i];
        if (e.task < 0 || e.task >= n_tasks || e.worker < 0 || e.worker >= n_workers)
            throw ValidationError("answer entry references an unknown task or worker id");
        if (e.answer < 1 || e.answer > k)
            throw ValidationError("answer " + std::to_string(e.answer) + " outside 1.." +
                                  std::to_string(k) + " for task " +
                                  m.task_names_[static_cast<size_t>(e.task)] + ", worker " +
                                  m.worker_names_[static_cast<size_t>(e.worker)]);
        if (i > 0 && entries[i - 1].task == e.task && entries[i - 1].worker == e.worker)
            throw ValidationError("duplicate answer for task " +
                                  m.task_names_[static_cast<size_t>(e.task)] + ", worker " +
                                  m.worker_names_[static_cast<size_t>(e.worker)]);
    }
    m.entries_ = std::move(entries);

    m.task_offsets_.assign(static_cast<size_t>(n_tasks) + 1, 0);
    for (const AnswerEntry& e : m.entries_) ++m.task_offsets_[static_cast<size_t>(e.task) + 1];
    for (int i = 0; i < n_tasks; ++i) {
        if (m.task_offsets_[static_cast<size_t>(i) + 1] == 0)
            throw ValidationError("task " + m.task_names_[static_cast<size_t>(i)] +
                                  " has no answers");
        m.task_offsets_[static_cast<size_t>(i) + 1] += m.task_offsets_[static_cast<size_t>(i)];
    }

    m.worker_offsets_.assign(static_cast<size_t>(n_workers) + 1, 0);
    for (const AnswerEntry& e : m.entries_) ++m.worker_offsets_[static_cast<size_t>(e.worker) + 1];
    for (int j = 0; j < n_workers; ++j)
        m.worker_offsets_[static_cast<size_t>(j) + 1] += m.worker_offsets_[static_cast<size_t>(j)];
    m.worker_entry_ids_.resize(m.entries_.size());
    std::vector<int> cursor(m.worker_offsets_.begin(), m.worker_offsets_.end() - 1);
    for (int idx = 0; idx < m.n_entries(); ++idx) {
        int w = m.entries_[static_cast<size_t>(idx)].worker;
        m.worker_entry_ids_[static_cast<size_t>(cursor[static_cast<size_t>(w)]++)] = idx;
    }

    for (int i = 0; i < n_tasks; ++i) {
        auto [it, fresh] = m.task_lookup_.emplace(m.task_names_[static_cast<size_t>(i)], i);
        if (!fresh) throw ValidationError("duplicate task id '" + it->first + "'");
    }
    for (int j = 0; j < n_workers; ++j) {
        auto [it, fresh] = m.worker_lookup_.emplace(m.worker_names_[static_cast<size_t>(j)], j);
        if (!fresh) throw ValidationError("duplicate worker id '" + it->first + "'");
    }
    return m;
}

std::span<const AnswerEntry> AnswerMatrix::task_entries(int task) const {
    int b = task_offsets_[static_cast<size_t>(task)];
    int e = task_offsets_[static_cast<size_t>(task) + 1];
    return {entries_.data() + b, static_cast<size_t>(e - b)};
}

std::span<const int> AnswerMatrix::worker_entry_ids(int worker) const {
    int b = worker_offsets_[static_cast<size_t>(worker)];
    int e = worker_offsets_[static_cast<size_t>(worker) + 1];
    return {worker_entry_ids_.data() + b, static_cast<size_t>(e - b)};
}

int AnswerMatrix::task_id(const std::string& name) const {
    auto it = task_lookup_.find(name);
    return it == task_lookup_.end() ? -1 : it->second;
}

int AnswerMatrix::worker_id(const std::string& name) const {
    auto it = worker_lookup_.find(name);
    return it == worker_lookup_.end() ? -1 : it->second;
}

ProbeSet ProbeSet::none(int n_tasks) {
    ProbeSet p;
    p.label_by_task_.assign(static_cast<size_t>(n_tasks), 0);
    return p;
}

ProbeSet ProbeSet::from_pairs(int n_tasks, int k,
                              const std::vector<std::pair<int, int>>& task_label) {
    ProbeSet p;
    p.label_by_task_.assign(static_cast<size_t>(n_tasks), 0);
    for (auto [task, label] : task_label) {
        if (task < 0 || task >= n_tasks)
            throw ValidationError("probe references an unknown task id");
        if (label < 1 || label > k)
            throw ValidationError("probe label " + std::to_string(label) + " outside 1.." +
                                  std::to_string(k));
        if (p.label_by_task_[static_cast<size_t>(task)] != 0)
            throw ValidationError("task listed twice in probe set");
        p.label_by_task_[static_cast<size_t>(task)] = label;
    }
    for (int i = 0; i < n_tasks; ++i)
        if (p.label_by_task_[static_cast<size_t>(i)] != 0) p.probe_tasks_.push_back(i);
    return p;
}

AnswerMatrix load_answer_matrix(const std::string& path, int k) {
    CsvTable table = read_csv(path);
    int c_task = table.column("task_id");
    int c_worker = table.column("worker_id");
    int c_answer = table.column("answer");
    if (c_task < 0 || c_worker < 0 || c_answer < 0)
        throw ParseError(path + ": header must contain task_id, worker_id, answer");
    if (table.rows.empty()) throw ValidationError(path + ": no entries");

    std::vector<std::string> task_names, worker_names;
    std::unordered_map<std::string, int> task_ids, worker_ids;
    std::vector<AnswerEntry> entries;
    entries.reserve(table.rows.size());
    int max_answer = 0;
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::string context = path + ":" + std::to_string(table.line_numbers[r]);
        const std::string& tname = row[static_cast<size_t>(c_task)];
        const std::string& wname = row[static_cast<size_t>(c_worker)];
        if (tname.empty() || wname.empty()) throw ParseError(context + ": empty id field");
        long answer = parse_long(row[static_cast<size_t>(c_answer)], context);
        if (answer < 1 || (k > 0 && answer > k))
            throw ValidationError(context + ": answer " + std::to_string(answer) +
                                  " outside 1.." + std::to_string(k > 0 ? k : 0));
        max_answer = std::max(max_answer, static_cast<int>(answer));
        auto [ti, t_fresh] = task_ids.emplace(tname, static_cast<int>(task_names.size()));
        if (t_fresh) task_names.push_back(tname);
        auto [wi, w_fresh] = worker_ids.emplace(wname, static_cast<int>(worker_names.size()));
        if (w_fresh) worker_names.push_back(wname);
        entries.push_back({ti->second, wi->second, static_cast<int>(answer)});
    }
    int effective_k = k > 0 ? k : std::max(max_answer, 2);
    return AnswerMatrix::build(effective_k, std::move(task_names), std::move(worker_names),
                               std::move(entries));
}

void save_answer_matrix(const AnswerMatrix& m, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<size_t>(m.n_entries()));
    for (const AnswerEntry& e : m.entries())
        rows.push_back({m.task_name(e.task), m.worker_name(e.worker), std::to_string(e.answer)});
    write_csv(path, {"task_id", "worker_id", "answer"}, rows);
}

std::vector<std::pair<std::string, int>> load_label_file(const std::string& path) {
    CsvTable table = read_csv(path);
    int c_task = table.column("task_id");
    int c_label = table.column("answer");
    if (c_label < 0) c_label = table.column("z");
    if (c_task < 0 || c_label < 0)
        throw ParseError(path + ": header must contain task_id and answer (or z)");
    std::vector<std::pair<std::string, int>> out;
    out.reserve(table.rows.size());
    for (size_t r = 0; r < table.rows.size(); ++r) {
        std::string context = path + ":" + std::to_string(table.line_numbers[r]);
        long label = parse_long(table.rows[r][static_cast<size_t>(c_label)], context);
        out.emplace_back(table.rows[r][static_cast<size_t>(c_task)], static_cast<int>(label));
    }
    return out;
}

ProbeSet load_probe_set(const std::string& path, const AnswerMatrix& m) {
    std::vector<std::pair<int, int>> pairs;
    for (const auto& [name, label] : load_label_file(path)) {
        int task = m.task_id(name);
        if (task < 0) throw ValidationError(path + ": unknown task id '" + name + "'");
        pairs.emplace_back(task, label);
    }
    return ProbeSet::from_pairs(m.n_tasks(), m.k(), pairs);
}

void save_probe_set(const ProbeSet& probes, const AnswerMatrix& m, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (int task : probes.probe_tasks())
        rows.push_back({m.task_name(task), std::to_string(probes.label(task))});
    write_csv(path, {"task_id", "answer"}, rows);
}

void save_decisions(const InferredAnswers& decisions, const AnswerMatrix& m,
                    const std::string& path) {
    if (static_cast<int>(decisions.label.size()) != m.n_tasks())
        throw InternalError("decision vector size does not match task count");
    std::vector<std::vector<std::string>> rows;
    rows.reserve(decisions.label.size());
    for (int i = 0; i < m.n_tasks(); ++i)
        rows.push_back({m.task_name(i), std::to_string(decisions.label[static_cast<size_t>(i)])});
    write_csv(path, {"task_id", "answer"}, rows);
}

AssignmentGraph generate_regular_bipartite(int n_tasks, int n_workers, int degree,
                                           std::uint64_t seed) {
    if (n_tasks < 1 || n_workers < 1)
        throw ValidationError("graph needs at least one task and one worker");
    if (degree < 1 || degree > n_workers)
        throw ValidationError("per-task degree " + std::to_string(degree) +
                              " outside 1.." + std::to_string(n_workers));

    AssignmentGraph g;
    g.degree = degree;

    if (degree == n_workers) {  // complete bipartite; matching is forced
        for (int i = 0; i < n_tasks; ++i)
            for (int j = 0; j < n_workers; ++j)
                g.edges.emplace_back(canonical_task_name(i), canonical_worker_name(j));
        return g;
    }

    Rng rng(seed);
    const long total = static_cast<long>(degree) * n_tasks;
    const long base = total / n_workers;
    const int extra = static_cast<int>(total % n_workers);
    // Workers receiving the extra stub are chosen by a seeded shuffle.
    std::vector<int> order(static_cast<size_t>(n_workers));
    for (int j = 0; j < n_workers; ++j) order[static_cast<size_t>(j)] = j;
    rng.shuffle(order);
    std::vector<int> stub_count(static_cast<size_t>(n_workers), static_cast<int>(base));
    for (int r = 0; r < extra; ++r) ++stub_count[static_cast<size_t>(order[static_cast<size_t>(r)])];

    constexpr int kPerTaskRetryCap = 1000;
    constexpr int kGlobalRetryCap = 1000;
    for (int attempt = 0; attempt < kGlobalRetryCap; ++attempt) {
        std::vector<int> stubs;
        stubs.reserve(static_cast<size_t>(total));
        for (int j = 0; j < n_workers; ++j)
            for (int c = 0; c < stub_count[static_cast<size_t>(j)]; ++c) stubs.push_back(j);
        rng.shuffle(stubs);

        std::vector<std::pair<int, int>> edges;
        edges.reserve(static_cast<size_t>(total));
        size_t pos = 0;
        bool ok = true;
        std::vector<char> in_task(static_cast<size_t>(n_workers), 0);
        for (int i = 0; i < n_tasks && ok; ++i) {
            std::vector<int> chosen;
            chosen.reserve(static_cast<size_t>(degree));
            int retries = 0;
            while (static_cast<int>(chosen.size()) < degree) {
                int cand = stubs[pos];
                if (!in_task[static_cast<size_t>(cand)]) {
                    in_task[static_cast<size_t>(cand)] = 1;
                    chosen.push_back(cand);
                    ++pos;
                    continue;
                }
                // Duplicate within this task: swap in a random later stub.
                size_t remaining = stubs.size() - pos;
                if (remaining > 1 && ++retries <= kPerTaskRetryCap) {
                    size_t off =
                        pos + 1 +
                        static_cast<size_t>(rng.next_below(static_cast<int>(remaining - 1)));
                    std::swap(stubs[pos], stubs[off]);
                    continue;
                }
                // The tail cannot supply a new worker (common in dense
                // deals): trade the stuck stub with a placed edge whose
                // task does not yet use it. Degrees are unchanged.
                bool repaired = false;
                for (int tries = 0; tries < 200 && !edges.empty(); ++tries) {
                    size_t eidx =
                        static_cast<size_t>(rng.next_below(static_cast<int>(edges.size())));
                    int other_worker = edges[eidx].second;
                    if (in_task[static_cast<size_t>(other_worker)]) continue;
                    size_t block = eidx / static_cast<size_t>(degree) * static_cast<size_t>(degree);
                    bool has_dup = false;
                    for (size_t e = block; e < block + static_cast<size_t>(degree); ++e)
                        if (edges[e].second == cand) {
                            has_dup = true;
                            break;
                        }
                    if (has_dup) continue;
                    edges[eidx].second = cand;
                    stubs[pos] = other_worker;
                    repaired = true;
                    break;
                }
                if (!repaired) {
                    ok = false;
                    break;
                }
                retries = 0;
            }
            for (int j : chosen) {
                in_task[static_cast<size_t>(j)] = 0;
                edges.emplace_back(i, j);
            }
        }
        if (!ok) continue;
        std::sort(edges.begin(), edges.end());
        for (auto [t, w] : edges)
            g.edges.emplace_back(canonical_task_name(t), canonical_worker_name(w));
        return g;
    }
    throw ValidationError("stub matching failed to produce a duplicate-free assignment");
}

AssignmentGraph load_assignment_graph(const std::string& path) {
    CsvTable table = read_csv(path);
    int c_task = table.column("task_id");
    int c_worker = table.column("worker_id");
    if (c_task < 0 || c_worker < 0)
        throw ParseError(path + ": header must contain task_id and worker_id");
    AssignmentGraph g;
    std::unordered_set<std::string> seen;
    std::unordered_map<std::string, int> per_task;
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& t = table.rows[r][static_cast<size_t>(c_task)];
        const std::string& w = table.rows[r][static_cast<size_t>(c_worker)];
        if (!seen.insert(t + "\x1f" + w).second)
            throw ValidationError(path + ":" + std::to_string(table.line_numbers[r]) +
                                  ": duplicate edge (" + t + ", " + w + ")");
        ++per_task[t];
        g.edges.emplace_back(t, w);
    }
    if (g.edges.empty()) throw ValidationError(path + ": no edges");
    int degree = -1;
    for (const auto& [t, c] : per_task) {
        if (degree < 0) degree = c;
        if (c != degree)
            throw ValidationError(path + ": graph is not task-regular (task '" + t + "' has " +
                                  std::to_string(c) + " workers, expected " +
                                  std::to_string(degree) + ")");
    }
    g.degree = degree;
    return g;
}

void save_assignment_graph(const AssignmentGraph& g, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(g.edges.size());
    for (const auto& [t, w] : g.edges) rows.push_back({t, w});
    write_csv(path, {"task_id", "worker_id"}, rows);
}

AnswerMatrix restrict_to_graph(const AnswerMatrix& m, const AssignmentGraph& g) {
    std::unordered_set<std::uint64_t> allowed;
    allowed.reserve(g.edges.size() * 2);
    for (const auto& [tname, wname] : g.edges) {
        int t = m.task_id(tname);
        int w = m.worker_id(wname);
        if (t < 0) throw ValidationError("graph references unknown task id '" + tname + "'");
        if (w < 0) throw ValidationError("graph references unknown worker id '" + wname + "'");
        allowed.insert(pair_key(t, w));
    }

    std::vector<AnswerEntry> kept;
    std::vector<char> task_alive(static_cast<size_t>(m.n_tasks()), 0);
    for (const AnswerEntry& e : m.entries()) {
        if (allowed.count(pair_key(e.task, e.worker))) {
            kept.push_back(e);
            task_alive[static_cast<size_t>(e.task)] = 1;
        }
    }
    if (kept.empty()) throw ValidationError("restriction keeps no entries");

    // Tasks that lost every answer are dropped; workers are all retained.
    std::vector<int> new_task_id(static_cast<size_t>(m.n_tasks()), -1);
    std::vector<std::string> task_names;
    for (int i = 0; i < m.n_tasks(); ++i) {
        if (task_alive[static_cast<size_t>(i)]) {
            new_task_id[static_cast<size_t>(i)] = static_cast<int>(task_names.size());
            task_names.push_back(m.task_name(i));
        }
    }
    std::vector<std::string> worker_names;
    worker_names.reserve(static_cast<size_t>(m.n_workers()));
    for (int j = 0; j < m.n_workers(); ++j) worker_names.push_back(m.worker_name(j));
    for (AnswerEntry& e : kept) e.task = new_task_id[static_cast<size_t>(e.task)];
    return AnswerMatrix::build(m.k(), std::move(task_names), std::move(worker_names),
                               std::move(kept));
}

}  // namespace crowdagg
