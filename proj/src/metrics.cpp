#include "annomesh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "annomesh/binpack.hpp"

namespace annomesh::metrics {

namespace fs = std::filesystem;

namespace {

std::string num(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) fields.push_back(field);
    if (!line.empty() && line.back() == sep) fields.emplace_back();
    return fields;
}

template <class T>
T to(const std::string& text) {
    std::istringstream in(text);
    T value{};
    in >> value;
    if (!in || in.peek() != std::char_traits<char>::eof())
        throw std::runtime_error("trace: cannot parse '" + text + "'");
    return value;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

// Rows of a headed CSV file, header dropped.
std::vector<std::vector<std::string>> rows(const fs::path& path) {
    auto in = open_in(path);
    std::vector<std::vector<std::string>> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(split(line, ','));
    return out;
}

}  // namespace

double observation_coverage(std::span<const Observation> observations, std::size_t objects, Step until) {
    if (objects == 0) return 0.0;
    std::set<int> seen;
    for (const auto& o : observations)
        if (o.step <= until) seen.insert(o.object);
    return static_cast<double>(seen.size()) / static_cast<double>(objects);
}

double consolidation_coverage(std::span<const MapEntry> present, std::size_t objects) {
    if (objects == 0) return 0.0;
    std::set<int> seen;
    for (const auto& e : present) seen.insert(e.object);
    return static_cast<double>(seen.size()) / static_cast<double>(objects);
}

std::optional<double> map_accuracy(std::span<const MapEntry> map) {
    if (map.empty()) return std::nullopt;
    const auto correct = std::count_if(map.begin(), map.end(), [](const MapEntry& e) { return e.correct(); });
    return static_cast<double>(correct) / static_cast<double>(map.size());
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Spread spread(std::span<const double> values) {
    Spread s;
    if (values.empty()) return {std::nan(""), std::nan(""), std::nan(""), std::nan("")};
    std::vector<double> v(values.begin(), values.end());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.median = quantile(v, 0.5);
    s.q25 = quantile(v, 0.25);
    s.q75 = quantile(v, 0.75);
    return s;
}

std::vector<Spread> bandwidth_per_agent(const Trace& trace) {
    std::vector<Spread> out;
    for (const auto& second : trace.bytes_per_second) {
        std::vector<double> v(second.begin(), second.end());
        out.push_back(spread(v));
    }
    return out;
}

double mean_bandwidth(const Trace& trace) {
    if (trace.agents == 0 || trace.frames.empty()) return 0.0;
    std::uint64_t total = 0;
    for (const auto& second : trace.bytes_per_second)
        for (auto b : second) total += b;
    const double seconds = static_cast<double>(trace.frames.size()) / trace.ticks_per_second;
    return static_cast<double>(total) / (static_cast<double>(trace.agents) * seconds);
}

Histograms nodeid_hash_histograms(const Trace& trace) { return {trace.nodeid_histogram, trace.hash_histogram}; }

PackingAudit audit_packing(std::span<const MetricsFrame> frames, double tolerance) {
    PackingAudit audit;
    std::map<std::tuple<std::size_t, std::size_t, std::vector<std::size_t>>, std::pair<double, double>> cache;
    for (const auto& f : frames) {
        std::vector<std::size_t> bins = f.neighbor_counts;
        std::sort(bins.begin(), bins.end());
        auto key = std::tuple{f.stored_items, f.capacity, bins};
        auto it = cache.find(key);
        if (it == cache.end()) {
            const double best = binpack::optimal_cost(f.stored_items, bins, f.capacity);
            const double worst = binpack::worst_cost(f.stored_items, bins, f.capacity);
            it = cache.emplace(std::move(key), std::pair{best, worst}).first;
        }
        const auto [best, worst] = it->second;
        audit.optimal.push_back(best);
        audit.worst.push_back(worst);
        if (best > f.realized_cost + tolerance || f.realized_cost > worst + tolerance) ++audit.violations;
        ++audit.frames;
    }
    return audit;
}

// Files ------------------------------------------------------------------------

void write_frames_csv(std::ostream& out, std::span<const MetricsFrame> frames) {
    out << "step,observed_coverage,consolidation_coverage,map_accuracy,bytes_sent_total,realized_cost,"
           "stored_items,capacity,neighbor_counts\n";
    for (const auto& f : frames) {
        out << f.step << ',' << num(f.observation_coverage) << ',' << num(f.consolidation_coverage) << ','
            << (f.map_accuracy ? num(*f.map_accuracy) : "") << ',' << f.bytes_sent_total << ','
            << num(f.realized_cost) << ',' << f.stored_items << ',' << f.capacity << ',';
        for (std::size_t i = 0; i < f.neighbor_counts.size(); ++i) out << (i ? ";" : "") << f.neighbor_counts[i];
        out << '\n';
    }
}

std::vector<MetricsFrame> read_frames_csv(std::istream& in) {
    std::vector<MetricsFrame> frames;
    std::string line;
    if (!std::getline(in, line) || line.rfind("step,", 0) != 0) throw std::runtime_error("trace: missing header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 9) throw std::runtime_error("trace: expected 9 columns: " + line);
        MetricsFrame frame;
        frame.step = to<Step>(f[0]);
        frame.observation_coverage = to<double>(f[1]);
        frame.consolidation_coverage = to<double>(f[2]);
        if (!f[3].empty()) frame.map_accuracy = to<double>(f[3]);
        frame.bytes_sent_total = to<std::uint64_t>(f[4]);
        frame.realized_cost = to<double>(f[5]);
        frame.stored_items = to<std::size_t>(f[6]);
        frame.capacity = to<std::size_t>(f[7]);
        if (!f[8].empty())
            for (const auto& n : split(f[8], ';')) frame.neighbor_counts.push_back(to<std::size_t>(n));
        frames.push_back(std::move(frame));
    }
    return frames;
}

std::vector<MetricsFrame> read_frames_csv(const fs::path& path) {
    auto in = open_in(path);
    return read_frames_csv(in);
}

void write_trace(const Trace& trace, const fs::path& dir) {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "run.txt");
        out << "agents=" << trace.agents << "\nobjects=" << trace.objects << "\nmin_votes=" << trace.min_votes
            << "\nticks_per_second=" << trace.ticks_per_second << "\nseed=" << trace.seed
            << "\nsteps=" << trace.frames.size() << '\n';
    }
    {
        auto out = open_out(dir / "trace.csv");
        write_frames_csv(out, trace.frames);
    }
    {
        auto out = open_out(dir / "observations.csv");
        out << "step,agent,object,label\n";
        for (const auto& o : trace.observations)
            out << o.step << ',' << o.agent << ',' << o.object << ',' << o.label << '\n';
    }
    {
        auto out = open_out(dir / "consolidations.csv");
        out << "step,agent,object,true_class,label,votes,tuple\n";
        for (const auto& c : trace.consolidations)
            out << c.step << ',' << c.agent << ',' << c.object << ',' << c.true_class << ',' << c.label << ','
                << c.votes << ',' << c.tuple << '\n';
    }
    {
        auto out = open_out(dir / "final_map.csv");
        out << "object,true_class,consolidated_class,votes\n";
        for (const auto& e : trace.final_map)
            out << e.object << ',' << e.true_class << ',' << e.label << ',' << e.votes << '\n';
    }
    {
        auto out = open_out(dir / "histograms.csv");
        out << "kind,value,count\n";
        for (const auto& [value, count] : trace.nodeid_histogram) out << "nodeid," << value << ',' << count << '\n';
        for (const auto& [value, count] : trace.hash_histogram) out << "hash," << value << ',' << count << '\n';
    }
    {
        auto out = open_out(dir / "bandwidth.csv");
        out << "second,agent,bytes\n";
        for (std::size_t s = 0; s < trace.bytes_per_second.size(); ++s)
            for (std::size_t a = 0; a < trace.bytes_per_second[s].size(); ++a)
                out << s << ',' << a << ',' << trace.bytes_per_second[s][a] << '\n';
    }
}

Trace read_trace(const fs::path& dir) {
    Trace trace;
    {
        auto in = open_in(dir / "run.txt");
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const auto key = line.substr(0, eq);
            const auto value = line.substr(eq + 1);
            if (key == "agents") trace.agents = to<std::size_t>(value);
            if (key == "objects") trace.objects = to<std::size_t>(value);
            if (key == "min_votes") trace.min_votes = to<int>(value);
            if (key == "ticks_per_second") trace.ticks_per_second = to<int>(value);
            if (key == "seed") trace.seed = to<std::uint64_t>(value);
        }
    }
    trace.frames = read_frames_csv(dir / "trace.csv");
    for (const auto& r : rows(dir / "observations.csv"))
        trace.observations.push_back({to<Step>(r.at(0)), to<int>(r.at(1)), to<int>(r.at(2)), to<int>(r.at(3))});
    for (const auto& r : rows(dir / "consolidations.csv"))
        trace.consolidations.push_back({to<Step>(r.at(0)), to<int>(r.at(1)), to<int>(r.at(2)), to<int>(r.at(3)),
                                        to<int>(r.at(4)), to<int>(r.at(5)), to<mesh::TupleId>(r.at(6))});
    for (const auto& r : rows(dir / "final_map.csv"))
        trace.final_map.push_back({to<int>(r.at(0)), to<int>(r.at(1)), to<int>(r.at(2)), to<int>(r.at(3))});
    for (const auto& r : rows(dir / "histograms.csv")) {
        if (r.at(0) == "nodeid")
            trace.nodeid_histogram[to<mesh::NodeId>(r.at(1))] = to<std::uint64_t>(r.at(2));
        else
            trace.hash_histogram[to<mesh::TupleHash>(r.at(1))] = to<std::uint64_t>(r.at(2));
    }
    for (const auto& r : rows(dir / "bandwidth.csv")) {
        const auto s = to<std::size_t>(r.at(0));
        const auto a = to<std::size_t>(r.at(1));
        if (trace.bytes_per_second.size() <= s) trace.bytes_per_second.resize(s + 1, std::vector<std::uint64_t>(trace.agents));
        trace.bytes_per_second[s].at(a) = to<std::uint64_t>(r.at(2));
    }
    return trace;
}

ensemble::ClassModel read_class_csv(std::istream& in) {
    ensemble::ClassModel model;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto f = split(line, ',');
        if (f.size() != 2) throw std::runtime_error("class csv: expected name,accuracy: " + line);
        double p = 0;
        try {
            p = to<double>(f[1]);
        } catch (const std::exception&) {
            if (model.names.empty()) continue;  // header row
            throw;
        }
        model.names.push_back(f[0]);
        model.accuracy.push_back(p);
    }
    model.validate();
    return model;
}

void write_ensemble_table(std::ostream& out, const ensemble::ClassModel& model, int n_max) {
    out << "class,accuracy,n,p_ens\n";
    const int c = model.class_count();
    for (int k = 0; k < c; ++k) {
        const double p = model.accuracy[static_cast<std::size_t>(k)];
        for (int n = 1; n <= n_max; ++n)
            out << model.names[static_cast<std::size_t>(k)] << ',' << num(p) << ',' << n << ','
                << num(ensemble::ensemble_accuracy(n, p, c)) << '\n';
    }
}

// Report ------------------------------------------------------------------------

namespace {

using Group = std::pair<std::size_t, int>;  // (agents, min votes)

void spread_cells(std::ostream& out, std::span<const double> values) {
    const auto s = spread(values);
    out << ',' << num(s.median) << ',' << num(s.q25) << ',' << num(s.q75);
}

// Values of `field` across runs at each sampled step; runs are cut to the shortest.
template <class Field>
void series(std::ostream& out, const Group& g, const std::vector<Trace>& runs, Field field) {
    std::size_t length = runs.front().frames.size();
    for (const auto& r : runs) length = std::min(length, r.frames.size());
    const int tps = runs.front().ticks_per_second;
    for (std::size_t s = 0; s < length; s += static_cast<std::size_t>(tps)) {
        out << g.first << ',' << g.second << ',' << s << ',' << num(static_cast<double>(s) / tps);
        field(out, s);
        out << '\n';
    }
}

}  // namespace

std::vector<fs::path> write_report(const fs::path& runs, const fs::path& out_dir) {
    if (!fs::is_directory(runs)) throw std::runtime_error("not a directory: " + runs.string());
    std::vector<fs::path> dirs;
    if (fs::exists(runs / "trace.csv")) dirs.push_back(runs);
    for (const auto& entry : fs::recursive_directory_iterator(runs))
        if (entry.is_directory() && fs::exists(entry.path() / "trace.csv")) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw std::runtime_error("no runs below " + runs.string());

    std::map<Group, std::vector<Trace>> groups;
    for (const auto& d : dirs) {
        Trace t = read_trace(d);
        groups[{t.agents, t.min_votes}].push_back(std::move(t));
    }

    fs::create_directories(out_dir);
    std::vector<fs::path> written;
    auto file = [&](const char* name) {
        written.push_back(out_dir / name);
        return open_out(written.back());
    };

    {
        auto out = file("fig3_ensemble.csv");
        write_ensemble_table(out, ensemble::ClassModel::scenenn_bga_dgcnn(), 8);
    }
    {
        auto out = file("fig4_coverage.csv");
        out << "agents,min_votes,step,time_s,observed_median,observed_q25,observed_q75,"
               "consolidated_median,consolidated_q25,consolidated_q75\n";
        for (const auto& [g, traces] : groups)
            series(out, g, traces, [&](std::ostream& o, std::size_t s) {
                std::vector<double> obs, con;
                for (const auto& t : traces) {
                    obs.push_back(t.frames[s].observation_coverage);
                    con.push_back(t.frames[s].consolidation_coverage);
                }
                spread_cells(o, obs);
                spread_cells(o, con);
            });
    }
    {
        auto out = file("fig5_accuracy.csv");
        out << "agents,min_votes,step,time_s,accuracy_median,accuracy_q25,accuracy_q75,"
               "consolidated_median,consolidated_q25,consolidated_q75\n";
        for (const auto& [g, traces] : groups)
            series(out, g, traces, [&](std::ostream& o, std::size_t s) {
                std::vector<double> acc, con;
                for (const auto& t : traces) {
                    if (t.frames[s].map_accuracy) acc.push_back(*t.frames[s].map_accuracy);
                    con.push_back(t.frames[s].consolidation_coverage);
                }
                spread_cells(o, acc);
                spread_cells(o, con);
            });
    }
    {
        auto out = file("fig6_cost.csv");
        out << "agents,min_votes,step,time_s,realized_median,realized_q25,realized_q75,optimal_median,worst_median\n";
        for (const auto& [g, traces] : groups) {
            std::vector<PackingAudit> audits;
            for (const auto& t : traces) audits.push_back(audit_packing(t.frames));
            series(out, g, traces, [&](std::ostream& o, std::size_t s) {
                std::vector<double> real, best, worst;
                for (std::size_t i = 0; i < traces.size(); ++i) {
                    real.push_back(traces[i].frames[s].realized_cost);
                    best.push_back(audits[i].optimal[s]);
                    worst.push_back(audits[i].worst[s]);
                }
                spread_cells(o, real);
                o << ',' << num(quantile(best, 0.5)) << ',' << num(quantile(worst, 0.5));
            });
        }
    }
    {
        auto out = file("fig7_histograms.csv");
        out << "agents,min_votes,kind,value,count\n";
        for (const auto& [g, traces] : groups) {
            Histograms pooled;
            for (const auto& t : traces) {
                for (const auto& [v, c] : t.nodeid_histogram) pooled.nodeid[v] += c;
                for (const auto& [v, c] : t.hash_histogram) pooled.hash[v] += c;
            }
            for (const auto& [v, c] : pooled.nodeid) out << g.first << ',' << g.second << ",nodeid," << v << ',' << c << '\n';
            for (const auto& [v, c] : pooled.hash) out << g.first << ',' << g.second << ",hash," << v << ',' << c << '\n';
        }
    }
    {
        auto out = file("fig8_bandwidth.csv");
        out << "agents,min_votes,second,bytes_per_agent_median,bytes_per_agent_q25,bytes_per_agent_q75\n";
        for (const auto& [g, traces] : groups) {
            std::size_t seconds = traces.front().bytes_per_second.size();
            for (const auto& t : traces) seconds = std::min(seconds, t.bytes_per_second.size());
            for (std::size_t s = 0; s < seconds; ++s) {
                std::vector<double> per_run;
                for (const auto& t : traces) per_run.push_back(spread(std::vector<double>(t.bytes_per_second[s].begin(), t.bytes_per_second[s].end())).mean);
                out << g.first << ',' << g.second << ',' << s;
                spread_cells(out, per_run);
                out << '\n';
            }
        }
    }
    {
        // Consolidated correctness by class and vote count, against p_ens.
        auto out = file("votes_accuracy.csv");
        const auto model = ensemble::ClassModel::scenenn_bga_dgcnn();
        out << "agents,min_votes,class,votes,correct,total,p_ens\n";
        for (const auto& [g, traces] : groups) {
            std::map<std::pair<int, int>, std::pair<int, int>> tally;
            for (const auto& t : traces)
                for (const auto& c : t.consolidations) {
                    auto& cell = tally[{c.true_class, c.votes}];
                    cell.first += c.label == c.true_class;
                    ++cell.second;
                }
            for (const auto& [key, cell] : tally) {
                const auto [k, n] = key;
                const bool known = k >= 0 && k < model.class_count();
                out << g.first << ',' << g.second << ',' << (known ? model.names[static_cast<std::size_t>(k)] : "?") << ','
                    << n << ',' << cell.first << ',' << cell.second << ','
                    << (known ? num(ensemble::ensemble_accuracy(n, model.accuracy[static_cast<std::size_t>(k)], model.class_count())) : "")
                    << '\n';
            }
        }
    }
    {
        auto out = file("summary.csv");
        out << "agents,min_votes,runs,final_observed_median,final_consolidated_median,final_accuracy_median,"
               "bytes_per_agent_per_s_median\n";
        for (const auto& [g, traces] : groups) {
            std::vector<double> obs, con, acc, bw;
            for (const auto& t : traces) {
                if (t.frames.empty()) continue;
                obs.push_back(t.frames.back().observation_coverage);
                con.push_back(t.frames.back().consolidation_coverage);
                if (auto a = map_accuracy(t.final_map)) acc.push_back(*a);
                bw.push_back(mean_bandwidth(t));
            }
            out << g.first << ',' << g.second << ',' << traces.size() << ',' << num(quantile(obs, 0.5)) << ','
                << num(quantile(con, 0.5)) << ',' << num(quantile(acc, 0.5)) << ',' << num(quantile(bw, 0.5)) << '\n';
        }
    }
    return written;
}

}  // namespace annomesh::metrics
