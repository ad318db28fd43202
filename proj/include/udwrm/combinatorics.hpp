#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "udwrm/error.hpp"

namespace udwrm {

// Exact counts live in 128 bits; every product and sum is overflow-checked.
using Count = unsigned __int128;

inline std::string to_string(Count value) {
    if (value == 0) return "0";
    std::string digits;
    while (value > 0) {
        digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
        value /= 10;
    }
    return {digits.rbegin(), digits.rend()};
}

namespace detail {

inline Count checked_mul(Count a, Count b, const char* what) {
    Count result = 0;
    if (__builtin_mul_overflow(a, b, &result))
        throw Error(ErrorKind::range, std::string(what) + " exceeds the exact 128-bit range");
    return result;
}

inline Count checked_add(Count a, Count b, const char* what) {
    Count result = 0;
    if (__builtin_add_overflow(a, b, &result))
        throw Error(ErrorKind::range, std::string(what) + " exceeds the exact 128-bit range");
    return result;
}

inline Count binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    Count result = 1;
    for (int j = 1; j <= k; ++j) {
        // result * (n-k+j) is divisible by j at every step
        result = checked_mul(result, static_cast<Count>(n - k + j), "binomial") / static_cast<Count>(j);
    }
    return result;
}

inline Count factorial(int n) {
    Count result = 1;
    for (int j = 2; j <= n; ++j) result = checked_mul(result, static_cast<Count>(j), "factorial");
    return result;
}

// n!! with (-1)!! = 0!! = 1
inline Count double_factorial(int n) {
    Count result = 1;
    for (int j = n; j > 1; j -= 2) result = checked_mul(result, static_cast<Count>(j), "double factorial");
    return result;
}

}  // namespace detail

inline constexpr int kMaxWickOrder = 20;
inline constexpr int kMaxEnumeratedOrder = 6;

/// Number of pairings of 2n field insertions, (2n)!/(2^n n!).
inline Count wick_term_count(int n) {
    if (n < 0) throw Error(ErrorKind::domain, "wick_term_count needs n >= 0");
    if (n > kMaxWickOrder)
        throw Error(ErrorKind::range, "wick_term_count is exact only for n <= " + std::to_string(kMaxWickOrder));
    return detail::double_factorial(2 * n - 1);
}

/// Number of pairings of 2k points, two per interval, with no pair inside one interval.
inline Count crossing_count(int k) {
    if (k < 0) throw Error(ErrorKind::domain, "crossing_count needs k >= 0");
    Count before = 1;  // k = 0
    Count current = 0; // k = 1
    if (k == 0) return before;
    for (int j = 2; j <= k; ++j) {
        Count next = detail::checked_mul(static_cast<Count>(2 * (j - 1)),
                                         detail::checked_add(current, before, "crossing_count"),
                                         "crossing_count");
        before = current;
        current = next;
    }
    return current;
}

/// Natural log of crossing_count(k) for k = 0..max_order; -inf where the count is zero.
inline std::vector<double> log_crossing_counts(int max_order) {
    if (max_order < 0) throw Error(ErrorKind::domain, "log_crossing_counts needs max_order >= 0");
    constexpr int exact_limit = 25;
    std::vector<double> logs(static_cast<std::size_t>(max_order) + 1);
    for (int k = 0; k <= std::min(max_order, exact_limit); ++k) {
        const Count c = crossing_count(k);
        logs[k] = c == 0 ? -std::numeric_limits<double>::infinity()
                         : std::log(static_cast<long double>(c));
    }
    if (max_order <= exact_limit) return logs;
    // continue with the ratio r_k = c(k)/c(k-1) = 2(k-1)(1 + 1/r_{k-1})
    long double ratio = static_cast<long double>(crossing_count(exact_limit)) /
                        static_cast<long double>(crossing_count(exact_limit - 1));
    long double log_value = logs[exact_limit];
    for (int k = exact_limit + 1; k <= max_order; ++k) {
        ratio = 2.0L * (k - 1) * (1.0L + 1.0L / ratio);
        log_value += std::log(ratio);
        logs[k] = static_cast<double>(log_value);
    }
    return logs;
}

/// Large-k approximation (2k-1)!!/sqrt(e) of crossing_count.
inline double crossing_count_asymptote(int k) {
    if (k < 0) throw Error(ErrorKind::domain, "crossing_count_asymptote needs k >= 0");
    const double log_double_factorial =
        std::lgamma(2.0 * k + 1.0) - k * std::log(2.0) - std::lgamma(k + 1.0);
    return std::exp(log_double_factorial - 0.5);
}

/// Number of integer partitions of k.
inline std::uint64_t partition_count(int k) {
    if (k < 0) throw Error(ErrorKind::domain, "partition_count needs k >= 0");
    std::vector<std::uint64_t> ways(static_cast<std::size_t>(k) + 1, 0);
    ways[0] = 1;
    for (int part = 1; part <= k; ++part) {
        for (int total = part; total <= k; ++total) {
            if (__builtin_add_overflow(ways[total], ways[total - part], &ways[total]))
                throw Error(ErrorKind::range, "partition_count exceeds 64 bits");
        }
    }
    return ways[k];
}

/// Parts in non-increasing order.
using Partition = std::vector<int>;

/// Partitions of k whose parts are all at least 2, in reverse lexicographic order.
inline std::vector<Partition> restricted_partitions(int k) {
    if (k < 2) throw Error(ErrorKind::domain, "restricted_partitions needs k >= 2");
    std::vector<Partition> result;
    Partition current;
    std::function<void(int, int)> build = [&](int remaining, int largest) {
        if (remaining == 0) {
            result.push_back(current);
            return;
        }
        for (int part = std::min(remaining, largest); part >= 2; --part) {
            if (remaining - part == 1) continue;
            current.push_back(part);
            build(remaining - part, part);
            current.pop_back();
        }
    };
    build(k, k);
    return result;
}

namespace detail {

inline Partition checked_partition(const Partition& parts) {
    if (parts.empty()) throw Error(ErrorKind::input, "partition has no parts");
    Partition sorted = parts;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    if (sorted.back() < 2) throw Error(ErrorKind::input, "partition parts must be >= 2");
    return sorted;
}

// Product over equal-part groups of (group size)!.
inline Count repeated_part_symmetry(const Partition& sorted) {
    Count symmetry = 1;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        symmetry = checked_mul(symmetry, factorial(static_cast<int>(j - i)), "partition symmetry");
        i = j;
    }
    return symmetry;
}

}  // namespace detail

/// Number of contraction classes whose cycle structure is the given partition.
inline Count partition_term_count(const Partition& parts) {
    const Partition sorted = detail::checked_partition(parts);
    int remaining = std::accumulate(sorted.begin(), sorted.end(), 0);
    Count total = 1;
    for (int part : sorted) {
        total = detail::checked_mul(total, detail::binomial(remaining, part), "partition_term_count");
        total = detail::checked_mul(total, detail::double_factorial(2 * part - 2), "partition_term_count");
        remaining -= part;
    }
    return total / detail::repeated_part_symmetry(sorted);
}

/// Distinct undirected cyclic orders of m labels; a 2-cycle counts once.
inline Count cyclic_arrangements(int m) {
    if (m < 2) throw Error(ErrorKind::domain, "cycles need at least two labels");
    if (m == 2) return 1;
    return detail::factorial(m - 1) / 2;
}

/// Number of distinct ratio monomials produced by a partition.
inline Count partition_monomial_count(const Partition& parts) {
    const Partition sorted = detail::checked_partition(parts);
    int remaining = std::accumulate(sorted.begin(), sorted.end(), 0);
    Count total = 1;
    for (int part : sorted) {
        total = detail::checked_mul(total, detail::binomial(remaining, part), "partition_monomial_count");
        total = detail::checked_mul(total, cyclic_arrangements(part), "partition_monomial_count");
        remaining -= part;
    }
    return total / detail::repeated_part_symmetry(sorted);
}

/// One Wick pairing of the 2k points of k intervals. Point id 2p is the later
/// point u of the p-th interval, 2p+1 the earlier point u - s.
struct ContractionClass {
    std::vector<int> labels;
    std::vector<std::pair<int, int>> edges;  // point ids, first < second, sorted

    int order() const noexcept { return static_cast<int>(labels.size()); }
};

inline int point_position(int point) noexcept { return point / 2; }
inline bool is_earlier_point(int point) noexcept { return point % 2 == 1; }

namespace detail {

inline void check_labels(std::span<const int> labels, std::size_t expected) {
    if (labels.size() != expected)
        throw Error(ErrorKind::input, "expected " + std::to_string(expected) + " interval labels, got " +
                                          std::to_string(labels.size()));
    for (std::size_t i = 1; i < labels.size(); ++i) {
        if (labels[i] <= labels[i - 1])
            throw Error(ErrorKind::input, "interval labels must be strictly increasing");
    }
}

}  // namespace detail

/// All pairings with no intra-interval pair, in lexicographic order of the edge lists.
inline std::vector<ContractionClass> enumerate_contraction_classes(int k, std::span<const int> labels) {
    if (k < 2 || k > kMaxEnumeratedOrder)
        throw Error(ErrorKind::range, "contraction classes are enumerated for 2 <= k <= " +
                                          std::to_string(kMaxEnumeratedOrder));
    detail::check_labels(labels, static_cast<std::size_t>(k));
    const int points = 2 * k;
    std::vector<ContractionClass> result;
    std::vector<bool> used(static_cast<std::size_t>(points), false);
    std::vector<std::pair<int, int>> edges;
    std::function<void()> pair_next = [&]() {
        int first = 0;
        while (first < points && used[first]) ++first;
        if (first == points) {
            result.push_back({std::vector<int>(labels.begin(), labels.end()), edges});
            return;
        }
        used[first] = true;
        for (int second = first + 1; second < points; ++second) {
            if (used[second] || point_position(second) == point_position(first)) continue;
            used[second] = true;
            edges.emplace_back(first, second);
            pair_next();
            edges.pop_back();
            used[second] = false;
        }
        used[first] = false;
    };
    pair_next();
    return result;
}

/// Lengths of the interval cycles traced by a class, as a partition.
inline Partition cycle_type(const ContractionClass& cls) {
    const int points = 2 * cls.order();
    std::vector<int> partner(static_cast<std::size_t>(points), -1);
    for (auto [a, b] : cls.edges) {
        partner[a] = b;
        partner[b] = a;
    }
    std::vector<bool> seen(static_cast<std::size_t>(cls.order()), false);
    Partition lengths;
    for (int start = 0; start < cls.order(); ++start) {
        if (seen[start]) continue;
        int length = 0;
        int point = 2 * start;
        do {
            seen[point_position(point)] = true;
            ++length;
            const int across = partner[point];
            point = across ^ 1;  // the other point of the interval just reached
        } while (point_position(point) != start);
        lengths.push_back(length);
    }
    std::sort(lengths.begin(), lengths.end(), std::greater<>());
    return lengths;
}

/// Product of pair ratios gamma_ij, stored as sorted label pairs (with repetition).
struct GammaMonomial {
    std::vector<std::pair<int, int>> factors;
    Count multiplicity = 1;

    friend bool operator==(const GammaMonomial&, const GammaMonomial&) = default;
};

/// The monomial bounding one contraction class: one factor per cross-interval pair.
inline std::vector<std::pair<int, int>> class_monomial(const ContractionClass& cls) {
    std::vector<std::pair<int, int>> factors;
    for (auto [a, b] : cls.edges) {
        int i = cls.labels[point_position(a)];
        int j = cls.labels[point_position(b)];
        factors.emplace_back(std::min(i, j), std::max(i, j));
    }
    std::sort(factors.begin(), factors.end());
    return factors;
}

namespace detail {

inline void set_partitions(std::span<const int> items, std::vector<std::vector<int>>& blocks,
                           std::size_t next, const std::function<void()>& visit) {
    if (next == items.size()) {
        visit();
        return;
    }
    // index loop: the recursion appends to blocks and may reallocate it
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        blocks[i].push_back(items[next]);
        set_partitions(items, blocks, next + 1, visit);
        blocks[i].pop_back();
    }
    blocks.push_back({items[next]});
    set_partitions(items, blocks, next + 1, visit);
    blocks.pop_back();
}

inline std::vector<std::vector<std::pair<int, int>>> block_cycles(const std::vector<int>& block) {
    std::vector<std::vector<std::pair<int, int>>> cycles;
    if (block.size() == 2) {
        cycles.push_back({{block[0], block[1]}, {block[0], block[1]}});
        return cycles;
    }
    std::vector<int> rest(block.begin() + 1, block.end());
    do {
        if (rest.front() > rest.back()) continue;  // reflection of an order already listed
        std::vector<std::pair<int, int>> cycle;
        int previous = block[0];
        for (int label : rest) {
            cycle.emplace_back(std::min(previous, label), std::max(previous, label));
            previous = label;
        }
        cycle.emplace_back(std::min(previous, block[0]), std::max(previous, block[0]));
        cycles.push_back(std::move(cycle));
    } while (std::next_permutation(rest.begin(), rest.end()));
    return cycles;
}

}  // namespace detail

/// Distinct ratio monomials of a partition over the given labels, each with
/// multiplicity partition_term_count / partition_monomial_count.
inline std::vector<GammaMonomial> cyclic_bound_terms(const Partition& parts, std::span<const int> labels) {
    const Partition sorted = detail::checked_partition(parts);
    const int k = std::accumulate(sorted.begin(), sorted.end(), 0);
    detail::check_labels(labels, static_cast<std::size_t>(k));

    std::set<std::vector<std::pair<int, int>>> distinct;
    std::vector<std::vector<int>> blocks;
    detail::set_partitions(labels, blocks, 0, [&]() {
        Partition sizes;
        for (const auto& block : blocks) sizes.push_back(static_cast<int>(block.size()));
        std::sort(sizes.begin(), sizes.end(), std::greater<>());
        if (sizes != sorted) return;
        std::vector<std::vector<std::pair<int, int>>> partial{{}};
        for (const auto& block : blocks) {
            std::vector<std::vector<std::pair<int, int>>> extended;
            for (const auto& cycle : detail::block_cycles(block)) {
                for (const auto& prefix : partial) {
                    auto merged = prefix;
                    merged.insert(merged.end(), cycle.begin(), cycle.end());
                    extended.push_back(std::move(merged));
                }
            }
            partial = std::move(extended);
        }
        for (auto& factors : partial) {
            std::sort(factors.begin(), factors.end());
            distinct.insert(factors);
        }
    });

    const Count monomials = partition_monomial_count(sorted);
    if (static_cast<Count>(distinct.size()) != monomials)
        throw Error(ErrorKind::numerical, "cyclic monomial enumeration disagrees with its count");
    const Count multiplicity = partition_term_count(sorted) / monomials;
    std::vector<GammaMonomial> result;
    for (const auto& factors : distinct) result.push_back({factors, multiplicity});
    return result;
}

}  // namespace udwrm
