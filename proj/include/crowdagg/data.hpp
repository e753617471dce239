#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace crowdagg {

// Label alphabet {1, ..., k}. Aggregation never depends on label identity
// beyond equality, so permuting the alphabet permutes every result.
struct CategorySpace {
    int k = 0;
};

struct AnswerEntry {
    int task;    // dense task id
    int worker;  // dense worker id
    int answer;  // 1..k
};

// Sparse task x worker answer matrix. At most one answer per (task, worker);
// every task has at least one answer; workers may have none (weight-0 later).
// Entries are stored task-major with CSR views for both sides.
class AnswerMatrix {
public:
    // Canonical dense ids with generated names t1.., w1..
    static AnswerMatrix build(int k, int n_tasks, int n_workers,
                              std::vector<AnswerEntry> entries);
    static AnswerMatrix build(int k, std::vector<std::string> task_names,
                              std::vector<std::string> worker_names,
                              std::vector<AnswerEntry> entries);

    int k() const { return k_; }
    int n_tasks() const { return static_cast<int>(task_names_.size()); }
    int n_workers() const { return static_cast<int>(worker_names_.size()); }
    int n_entries() const { return static_cast<int>(entries_.size()); }

    const std::vector<AnswerEntry>& entries() const { return entries_; }
    std::span<const AnswerEntry> task_entries(int task) const;
    // Indices into entries() for one worker, ordered by task.
    std::span<const int> worker_entry_ids(int worker) const;

    const std::string& task_name(int task) const { return task_names_[static_cast<size_t>(task)]; }
    const std::string& worker_name(int worker) const { return worker_names_[static_cast<size_t>(worker)]; }
    int task_id(const std::string& name) const;      // -1 if unknown
    int worker_id(const std::string& name) const;    // -1 if unknown

private:
    int k_ = 0;
    std::vector<AnswerEntry> entries_;           // sorted by (task, worker)
    std::vector<int> task_offsets_;              // CSR over entries_
    std::vector<int> worker_offsets_;            // CSR over worker_entry_ids_
    std::vector<int> worker_entry_ids_;
    std::vector<std::string> task_names_;
    std::vector<std::string> worker_names_;
    std::unordered_map<std::string, int> task_lookup_;
    std::unordered_map<std::string, int> worker_lookup_;
};

// Ground-truth labels for a subset of tasks. Empty set = fully unsupervised.
class ProbeSet {
public:
    static ProbeSet none(int n_tasks);
    // Pairs of (dense task id, label). Duplicate tasks are rejected.
    static ProbeSet from_pairs(int n_tasks, int k,
                               const std::vector<std::pair<int, int>>& task_label);

    bool is_probe(int task) const { return label_by_task_[static_cast<size_t>(task)] != 0; }
    int label(int task) const { return label_by_task_[static_cast<size_t>(task)]; }
    int count() const { return static_cast<int>(probe_tasks_.size()); }
    bool empty() const { return probe_tasks_.empty(); }
    int n_tasks() const { return static_cast<int>(label_by_task_.size()); }
    const std::vector<int>& probe_tasks() const { return probe_tasks_; }

private:
    std::vector<int> label_by_task_;  // 0 = not a probe
    std::vector<int> probe_tasks_;    // ascending dense ids
};

// One decided label per task, indexed by dense task id.
struct InferredAnswers {
    std::vector<int> label;
};

// Task-regular bipartite assignment; every task has exactly `degree`
// distinct workers. Nodes are carried by name so graphs survive files.
struct AssignmentGraph {
    int degree = 0;
    std::vector<std::pair<std::string, std::string>> edges;  // (task, worker)
};

std::string canonical_task_name(int idx);
std::string canonical_worker_name(int idx);

AnswerMatrix load_answer_matrix(const std::string& path, int k = 0);
void save_answer_matrix(const AnswerMatrix& m, const std::string& path);

ProbeSet load_probe_set(const std::string& path, const AnswerMatrix& m);
void save_probe_set(const ProbeSet& probes, const AnswerMatrix& m, const std::string& path);

void save_decisions(const InferredAnswers& decisions, const AnswerMatrix& m,
                    const std::string& path);

// Label files keyed by task name (decisions, truth, probes). The label
// column may be named either `answer` or `z`.
std::vector<std::pair<std::string, int>> load_label_file(const std::string& path);

// Configuration-model stub matching: worker degrees differ by at most one,
// duplicate (task, worker) stubs are rejected and re-drawn. Deterministic
// for a fixed seed.
AssignmentGraph generate_regular_bipartite(int n_tasks, int n_workers, int degree,
                                           std::uint64_t seed);

AssignmentGraph load_assignment_graph(const std::string& path);
void save_assignment_graph(const AssignmentGraph& g, const std::string& path);

// Keeps exactly the entries whose (task, worker) pair is a graph edge.
// Tasks left without answers are dropped; the worker roster is preserved.
AnswerMatrix restrict_to_graph(const AnswerMatrix& m, const AssignmentGraph& g);

}  // namespace crowdagg
