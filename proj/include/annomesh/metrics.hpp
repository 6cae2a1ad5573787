#ifndef ANNOMESH_METRICS_HPP
#define ANNOMESH_METRICS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "annomesh/ensemble.hpp"
#include "annomesh/mesh/tuple.hpp"

namespace annomesh::metrics {

using mesh::Step;

struct Observation {
    Step step = 0;
    int agent = 0;
    int object = 0;
    int label = 0;
};

struct Consolidation {
    Step step = 0;
    int agent = 0;
    int object = 0;
    int true_class = 0;
    int label = 0;
    int votes = 0;
    mesh::TupleId tuple = 0;
};

/// A consolidated annotation present in the shared memory.
struct MapEntry {
    int object = 0;
    int true_class = 0;
    int label = 0;
    int votes = 0;  // 0 when the producing vote is unknown

    bool correct() const { return label == true_class; }
};

struct MetricsFrame {
    Step step = 0;
    double observation_coverage = 0.0;
    double consolidation_coverage = 0.0;
    std::optional<double> map_accuracy;  // absent while nothing is consolidated
    std::uint64_t bytes_sent_total = 0;
    double realized_cost = 0.0;
    // Packing instance behind realized_cost, for offline audits.
    std::size_t stored_items = 0;
    std::size_t capacity = 0;
    std::vector<std::size_t> neighbor_counts;

    bool operator==(const MetricsFrame&) const = default;
};

struct Trace {
    std::size_t agents = 0;
    std::size_t objects = 0;
    int min_votes = 0;
    int ticks_per_second = 10;
    std::uint64_t seed = 0;

    std::vector<MetricsFrame> frames;
    std::vector<Observation> observations;
    std::vector<Consolidation> consolidations;
    std::vector<MapEntry> final_map;
    std::map<mesh::NodeId, std::uint64_t> nodeid_histogram;
    std::map<mesh::TupleHash, std::uint64_t> hash_histogram;
    std::vector<std::vector<std::uint64_t>> bytes_per_second;  // [second][agent]
};

// Coverage and accuracy ---------------------------------------------------

/// Objects with at least one raw annotation recorded up to `until`, over all objects.
double observation_coverage(std::span<const Observation> observations, std::size_t objects,
                            Step until = std::numeric_limits<Step>::max());
/// Objects with a consolidated annotation present, over all objects.
double consolidation_coverage(std::span<const MapEntry> present, std::size_t objects);
/// Correct consolidated annotations over all consolidated annotations.
std::optional<double> map_accuracy(std::span<const MapEntry> map);

// Bandwidth and histograms --------------------------------------------------

struct Spread {
    double mean = 0.0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

/// Per second: spread of bytes sent across agents.
std::vector<Spread> bandwidth_per_agent(const Trace& trace);
/// Bytes per second per agent averaged over the whole run.
double mean_bandwidth(const Trace& trace);

struct Histograms {
    std::map<mesh::NodeId, std::uint64_t> nodeid;
    std::map<mesh::TupleHash, std::uint64_t> hash;
};
Histograms nodeid_hash_histograms(const Trace& trace);

/// Lower median of a histogram.
template <class Key>
Key histogram_median(const std::map<Key, std::uint64_t>& histogram) {
    std::uint64_t total = 0;
    for (const auto& [key, count] : histogram) total += count;
    std::uint64_t seen = 0;
    for (const auto& [key, count] : histogram) {
        seen += count;
        if (2 * seen >= total) return key;
    }
    return Key{};
}

// Aggregation ---------------------------------------------------------------

/// Linear-interpolated quantile of unsorted values; NaN when empty.
double quantile(std::vector<double> values, double q);
Spread spread(std::span<const double> values);

// Packing audit ---------------------------------------------------------------

struct PackingAudit {
    std::size_t frames = 0;
    std::size_t violations = 0;  // frames with optimal > realized or realized > worst
    std::vector<double> optimal;
    std::vector<double> worst;
};
PackingAudit audit_packing(std::span<const MetricsFrame> frames, double tolerance = 1e-9);

// Files -------------------------------------------------------------------

/// trace.csv, final_map.csv, consolidations.csv, histograms.csv,
/// bandwidth.csv and run.txt under `dir`.
void write_trace(const Trace& trace, const std::filesystem::path& dir);
void write_frames_csv(std::ostream& out, std::span<const MetricsFrame> frames);
std::vector<MetricsFrame> read_frames_csv(std::istream& in);
std::vector<MetricsFrame> read_frames_csv(const std::filesystem::path& path);
Trace read_trace(const std::filesystem::path& dir);

/// Figure tables over every run directory below `runs`, written into `out`.
/// Returns the files written.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& runs, const std::filesystem::path& out);

/// Rows of `name,accuracy`; a header row and '#' comments are skipped.
ensemble::ClassModel read_class_csv(std::istream& in);

/// p_ens per class for n = 1..n_max: class,accuracy,n,p_ens.
void write_ensemble_table(std::ostream& out, const ensemble::ClassModel& model, int n_max);

}  // namespace annomesh::metrics

#endif  // ANNOMESH_METRICS_HPP
