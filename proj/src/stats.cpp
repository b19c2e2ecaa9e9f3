#include "vinfer/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>

#include "vinfer/common.hpp"
#include "vinfer/textutil.hpp"

namespace vinfer {

AccuracyTable accuracy_table(const std::vector<OutcomeRow>& results) {
    std::map<Setting, long long> correct;
    std::map<Setting, long long> total;
    for (const auto& row : results) {
        ++total[row.setting];
        if (row.correct) ++correct[row.setting];
    }
    AccuracyTable table;
    double sum = 0.0;
    for (Setting s : all_settings()) {
        auto it = total.find(s);
        if (it == total.end() || it->second == 0) {
            throw DataError("no results for setting " + to_string(s));
        }
        double pct = 100.0 * static_cast<double>(correct[s]) / static_cast<double>(it->second);
        table.per_setting[s] = pct;
        table.n_per_setting[s] = static_cast<int>(it->second);
        sum += pct;
    }
    table.all_mean = sum / static_cast<double>(all_settings().size());
    return table;
}

std::string FlipStats::formatted_ratio() const {
    if (ratio.has_value()) return format_fixed(*ratio, 2);
    if (improvements > 0) return "∞";
    return "-";
}

FlipStats flip_stats(const std::vector<OutcomeRow>& baseline,
                     const std::vector<OutcomeRow>& treated) {
    using Key = std::pair<std::string, Setting>;
    std::map<Key, bool> base_map;
    for (const auto& row : baseline) {
        base_map[{row.problem_id, row.setting}] = row.correct;
    }
    std::map<Key, bool> treat_map;
    for (const auto& row : treated) {
        treat_map[{row.problem_id, row.setting}] = row.correct;
    }
    std::string missing;
    for (const auto& [key, unused] : base_map) {
        if (!treat_map.count(key)) {
            missing += (missing.empty() ? "" : ", ") + key.first + "/" + to_string(key.second);
        }
    }
    for (const auto& [key, unused] : treat_map) {
        if (!base_map.count(key)) {
            missing += (missing.empty() ? "" : ", ") + key.first + "/" + to_string(key.second);
        }
    }
    if (!missing.empty()) {
        throw DataError("flip comparison key mismatch: " + missing);
    }
    FlipStats stats;
    for (const auto& [key, base_correct] : base_map) {
        bool treat_correct = treat_map.at(key);
        if (!base_correct && treat_correct) ++stats.improvements;
        if (base_correct && !treat_correct) ++stats.degradations;
    }
    if (stats.degradations > 0) {
        stats.ratio = static_cast<double>(stats.improvements) /
                      static_cast<double>(stats.degradations);
    }
    return stats;
}

std::string to_string(MWUMethod m) {
    switch (m) {
        case MWUMethod::exact: return "exact";
        case MWUMethod::normal_approx: return "normal_approx";
    }
    throw DataError("unknown MWU method enum value");
}

namespace {

// Doubled midranks of the pooled sample, so tied ranks stay integral.
std::vector<long long> doubled_midranks(const std::vector<double>& pooled_sorted,
                                        const std::vector<double>& values) {
    std::vector<long long> out;
    out.reserve(values.size());
    for (double v : values) {
        auto lo = std::lower_bound(pooled_sorted.begin(), pooled_sorted.end(), v);
        auto hi = std::upper_bound(pooled_sorted.begin(), pooled_sorted.end(), v);
        long long first_rank = (lo - pooled_sorted.begin()) + 1;
        long long last_rank = hi - pooled_sorted.begin();
        out.push_back(first_rank + last_rank);  // = 2 * midrank
    }
    return out;
}

// Exact one-tailed p: the fraction of equally likely assignments of the
// pooled ranks to the first sample whose U is at least the observed one.
// Counting subsets by (size, doubled-rank-sum) enumerates exactly the
// C(N, n) assignments without materializing them.
double exact_p(const std::vector<long long>& doubled_all, size_t pick, long long threshold_sum,
               bool upper_tail) {
    long long max_sum = 0;
    for (long long d : doubled_all) max_sum += d;
    std::vector<std::vector<std::uint64_t>> dp(
        pick + 1, std::vector<std::uint64_t>(static_cast<size_t>(max_sum) + 1, 0));
    dp[0][0] = 1;
    for (long long d : doubled_all) {
        for (size_t k = std::min(pick, dp.size() - 1); k >= 1; --k) {
            for (long long s = max_sum; s >= d; --s) {
                std::uint64_t prev = dp[k - 1][static_cast<size_t>(s - d)];
                if (prev != 0) dp[k][static_cast<size_t>(s)] += prev;
            }
        }
    }
    std::uint64_t total = 0;
    std::uint64_t tail = 0;
    for (long long s = 0; s <= max_sum; ++s) {
        std::uint64_t count = dp[pick][static_cast<size_t>(s)];
        total += count;
        bool in_tail = upper_tail ? s >= threshold_sum : s <= threshold_sum;
        if (in_tail) tail += count;
    }
    return static_cast<double>(static_cast<long double>(tail) /
                               static_cast<long double>(total));
}

double normal_upper_tail(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace

MWUResult mann_whitney_one_tailed(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) throw DataError("Mann-Whitney samples must be nonempty");
    auto n = static_cast<long long>(x.size());
    auto m = static_cast<long long>(y.size());

    double u = 0.0;
    for (double xv : x) {
        for (double yv : y) {
            if (xv > yv) {
                u += 1.0;
            } else if (xv == yv) {
                u += 0.5;
            }
        }
    }

    MWUResult result;
    result.u_statistic = u;

    std::vector<double> pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::sort(pooled.begin(), pooled.end());

    if (n * m <= 400) {
        result.method = MWUMethod::exact;
        // 2U = (doubled-rank sum of x) - n(n+1); tie the threshold to the
        // smaller sample to keep the table narrow.
        long long two_u = std::llround(2.0 * u);
        if (n <= m) {
            auto doubled_all = doubled_midranks(pooled, pooled);
            long long threshold = two_u + n * (n + 1);
            result.p_one_tailed =
                exact_p(doubled_all, static_cast<size_t>(n), threshold, true);
        } else {
            // Count over y instead: U_x >= u  <=>  U_y <= nm - u.
            auto doubled_all = doubled_midranks(pooled, pooled);
            long long threshold = (2 * n * m - two_u) + m * (m + 1);
            result.p_one_tailed =
                exact_p(doubled_all, static_cast<size_t>(m), threshold, false);
        }
        return result;
    }

    result.method = MWUMethod::normal_approx;
    auto nd = static_cast<double>(n);
    auto md = static_cast<double>(m);
    double big_n = nd + md;
    double mean = nd * md / 2.0;
    double tie_term = 0.0;
    size_t i = 0;
    while (i < pooled.size()) {
        size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    double variance =
        nd * md / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if (variance <= 0.0) {
        result.p_one_tailed = u > mean ? 0.0 : 1.0;
        return result;
    }
    double z = (u - mean - 0.5) / std::sqrt(variance);
    result.p_one_tailed = normal_upper_tail(z);
    return result;
}

CostStats cost_stats(const std::vector<CostRow>& rows) {
    if (rows.empty()) throw DataError("cost statistics need at least one repetition");
    std::map<int, std::pair<double, long long>> latency_by_run;
    double token_sum = 0.0;
    for (const auto& row : rows) {
        auto& [sum, count] = latency_by_run[row.repetition];
        sum += row.latency_s;
        ++count;
        token_sum += static_cast<double>(row.tokens);
    }
    CostStats stats;
    double run_mean_sum = 0.0;
    for (const auto& [rep, acc] : latency_by_run) {
        double run_mean = acc.first / static_cast<double>(acc.second);
        stats.per_run_mean_latency[rep] = run_mean;
        run_mean_sum += run_mean;
    }
    stats.mean_latency = run_mean_sum / static_cast<double>(latency_by_run.size());
    stats.mean_tokens = token_sum / static_cast<double>(rows.size());
    return stats;
}

}  // namespace vinfer
