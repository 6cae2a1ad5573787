#include "annomesh/ensemble.hpp"

#include <cmath>
#include <numeric>

namespace annomesh::ensemble {

namespace {

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error(std::string(what) + ": accuracy must lie in [0, 1]");
}

void check_classes(int c, const char* what) {
    if (c < 2) throw std::domain_error(std::string(what) + ": need at least two classes");
}

}  // namespace

Partition Partition::from_parts(std::vector<int> parts) {
    if (parts.empty()) throw std::invalid_argument("Partition: empty");
    std::sort(parts.begin(), parts.end(), std::greater<>());
    if (parts.back() <= 0) throw std::invalid_argument("Partition: parts must be positive");
    Partition xi;
    xi.multiplicities.assign(static_cast<std::size_t>(parts.front()), 0);
    for (int part : parts) ++xi.multiplicities[static_cast<std::size_t>(part - 1)];
    xi.parts = std::move(parts);
    return xi;
}

int Partition::total() const { return std::accumulate(parts.begin(), parts.end(), 0); }

int Partition::multiplicity(int part) const {
    if (part < 1 || part > static_cast<int>(multiplicities.size())) return 0;
    return multiplicities[static_cast<std::size_t>(part - 1)];
}

std::vector<Partition> enumerate_partitions(int n) {
    if (n < 1) throw std::invalid_argument("enumerate_partitions: n must be positive");
    std::vector<Partition> out;
    for_each_partition(n, n, n, [&](const std::vector<int>& parts) { out.push_back(Partition::from_parts(parts)); });
    return out;
}

BigInt partition_count(int n) {
    if (n < 0) throw std::invalid_argument("partition_count: n must be nonnegative");
    // table[k][m] = partitions of m into parts no larger than k
    std::vector<BigInt> row(static_cast<std::size_t>(n) + 1, 0);
    row[0] = 1;
    for (int k = 1; k <= n; ++k)
        for (int m = k; m <= n; ++m) row[static_cast<std::size_t>(m)] += row[static_cast<std::size_t>(m - k)];
    return row[static_cast<std::size_t>(n)];
}

BigInt binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    BigInt result = 1;
    for (int i = 1; i <= k; ++i) {
        result *= n - k + i;
        result /= i;
    }
    return result;
}

BigInt multinomial_coefficient(std::span<const int> parts) {
    // Product of binomials C(z_1 + ... + z_i, z_i); every step is exact.
    BigInt result = 1;
    int running = 0;
    for (int z : parts) {
        if (z < 0) throw std::invalid_argument("multinomial_coefficient: negative part");
        running += z;
        result *= binomial(running, z);
    }
    return result;
}

int ClassModel::class_index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::out_of_range("unknown class '" + name + "'");
    return static_cast<int>(it - names.begin());
}

void ClassModel::validate() const {
    check_classes(class_count(), "ClassModel");
    if (!names.empty() && names.size() != accuracy.size())
        throw std::invalid_argument("ClassModel: names and accuracies differ in length");
    for (double p : accuracy) check_probability(p, "ClassModel");
}

ClassModel ClassModel::scenenn_bga_dgcnn() {
    return ClassModel{
        {"bin", "cabinet", "chair", "desk", "display", "door", "shelf", "table", "bed", "pillow", "sink", "sofa",
         "toilet"},
        {0.819, 0.844, 0.926, 0.773, 0.804, 0.924, 0.805, 0.741, 0.727, 0.781, 0.792, 0.910, 0.797},
    };
}

int VoteTally::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

double pmf_phi(const VoteTally& tally, double p) {
    const int c = tally.class_count();
    check_classes(c, "pmf_phi");
    check_probability(p, "pmf_phi");
    for (int z : tally.counts)
        if (z < 0) throw std::invalid_argument("pmf_phi: negative vote count");
    const int n = tally.total();
    const int correct = tally.counts.front();
    const double wrong = (1.0 - p) / (c - 1);
    return static_cast<double>(multinomial_coefficient(tally.counts)) * std::pow(p, correct) *
           std::pow(wrong, n - correct);
}

BigInt preimage_count(const Partition& xi, int class_count) {
    check_classes(class_count, "preimage_count");
    const int omega = xi.length();
    if (omega == 0) throw std::invalid_argument("preimage_count: empty partition");
    if (omega > class_count) return 0;
    // The correct class occupies one slot of the largest part.
    std::vector<int> k = xi.multiplicities;
    --k.back();
    return binomial(class_count - 1, omega - 1) * multinomial_coefficient(k);
}

double success_given_partition(const Partition& xi) {
    if (xi.parts.empty()) throw std::invalid_argument("success_given_partition: empty partition");
    return 1.0 / xi.multiplicity(xi.largest());
}

double ensemble_accuracy(int n, double p, int class_count) {
    if (n < 1) throw std::domain_error("ensemble_accuracy: need at least one vote");
    check_classes(class_count, "ensemble_accuracy");
    check_probability(p, "ensemble_accuracy");

    // p = num / 2^shift exactly, so every term is an integer over the common
    // denominator 2^(shift n) (c - 1)^n c and the sum rounds once.
    int exponent = 0;
    const double mantissa = std::frexp(p, &exponent);
    const int shift = 53 - exponent;
    const BigInt scale = BigInt(1) << shift;
    const BigInt num = BigInt(static_cast<long long>(std::ldexp(mantissa, 53)));
    const BigInt num_wrong = scale - num;
    const BigInt wrong_classes = class_count - 1;

    BigInt numerator = 0;
    for_each_partition(n, std::min(n, class_count), n, [&](const std::vector<int>& parts) {
        const int omega = static_cast<int>(parts.size());
        const int top = parts.front();
        std::vector<int> k(static_cast<std::size_t>(top), 0);
        for (int part : parts) ++k[static_cast<std::size_t>(part - 1)];
        const BigInt weight = multinomial_coefficient(parts) * binomial(class_count, omega) * multinomial_coefficient(k);
        numerator += weight * boost::multiprecision::pow(num, static_cast<unsigned>(top)) *
                     boost::multiprecision::pow(num_wrong, static_cast<unsigned>(n - top)) *
                     boost::multiprecision::pow(wrong_classes, static_cast<unsigned>(top));
    });
    const BigInt denominator = boost::multiprecision::pow(scale, static_cast<unsigned>(n)) *
                               boost::multiprecision::pow(wrong_classes, static_cast<unsigned>(n)) * class_count;
    const double value = boost::multiprecision::cpp_rational(numerator, denominator).convert_to<double>();
    return std::clamp(value, 0.0, 1.0);
}

double brute_force_ensemble(int n, double p, int class_count) {
    if (n < 1) throw std::domain_error("brute_force_ensemble: need at least one vote");
    check_classes(class_count, "brute_force_ensemble");
    check_probability(p, "brute_force_ensemble");
    std::uint64_t sequences = 1;
    for (int i = 0; i < n; ++i) {
        sequences *= static_cast<std::uint64_t>(class_count);
        if (sequences > kBruteForceLimit) throw std::length_error("brute_force_ensemble: c^n too large to enumerate");
    }

    const double wrong = (1.0 - p) / (class_count - 1);
    std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
    std::vector<int> sequence(static_cast<std::size_t>(n), 0);
    counts[0] = n;
    // wins[k][t]: sequences with k correct votes where the correct class ties
    // t ways for first. Integer tallies keep the enumeration free of rounding.
    const auto width = static_cast<std::size_t>(class_count) + 1;
    std::vector<std::uint64_t> wins((static_cast<std::size_t>(n) + 1) * width, 0);
    // Odometer over all ordered vote sequences; class 0 is correct.
    for (std::uint64_t s = 0; s < sequences; ++s) {
        int best = 0;
        int ties = 0;
        for (int count : counts) {
            if (count > best) {
                best = count;
                ties = 1;
            } else if (count == best) {
                ++ties;
            }
        }
        if (counts[0] == best) ++wins[static_cast<std::size_t>(counts[0]) * width + static_cast<std::size_t>(ties)];

        for (std::size_t pos = 0; pos < sequence.size(); ++pos) {
            --counts[static_cast<std::size_t>(sequence[pos])];
            if (++sequence[pos] < class_count) {
                ++counts[static_cast<std::size_t>(sequence[pos])];
                break;
            }
            sequence[pos] = 0;
            ++counts[0];
        }
    }
    double total = 0.0;
    for (int k = 1; k <= n; ++k)
        for (std::size_t t = 1; t < width; ++t)
            if (const auto w = wins[static_cast<std::size_t>(k) * width + t])
                total += static_cast<double>(w) / static_cast<double>(t) * std::pow(p, k) * std::pow(wrong, n - k);
    return total;
}

std::optional<int> min_votes_for_target(double p, int class_count, double target, int n_max) {
    if (!(target > 0.0 && target <= 1.0)) throw std::domain_error("min_votes_for_target: target must lie in (0, 1]");
    if (n_max < 1) throw std::domain_error("min_votes_for_target: n_max must be positive");
    for (int n = 1; n <= n_max; ++n)
        if (ensemble_accuracy(n, p, class_count) >= target) return n;
    return std::nullopt;
}

}  // namespace annomesh::ensemble
