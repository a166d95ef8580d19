#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bookrec/common.hpp"
#include "bookrec/hybrid.hpp"
#include "bookrec/lfm.hpp"
#include "bookrec/similarity.hpp"

namespace bookrec {

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
    std::size_t sum_recommended = 0;  // sum |R(u)|
    std::size_t sum_relevant = 0;     // sum |T(u)|
    std::size_t sum_hits = 0;         // sum |R ∩ T|
};

/// Micro-averaged precision/recall/F over pooled counts. Customers with an
/// empty T(u) are excluded from both sums; F = 0 when p + r = 0.
inline Metrics precision_recall_f(
    const std::map<std::string, std::vector<std::string>>& recommendations,
    const std::map<std::string, std::set<std::string>>& truth) {
    Metrics m;
    bool any = false;
    for (const auto& [cid, t] : truth) {
        if (t.empty()) continue;
        any = true;
        m.sum_relevant += t.size();
        auto it = recommendations.find(cid);
        if (it == recommendations.end()) continue;
        m.sum_recommended += it->second.size();
        for (const auto& bid : it->second)
            if (t.count(bid)) ++m.sum_hits;
    }
    if (!any) throw ModelError("precision_recall_f: no customer with non-empty truth");
    if (m.sum_recommended > 0)
        m.precision = static_cast<double>(m.sum_hits) / static_cast<double>(m.sum_recommended);
    if (m.sum_relevant > 0)
        m.recall = static_cast<double>(m.sum_hits) / static_cast<double>(m.sum_relevant);
    if (m.precision + m.recall > 0.0)
        m.f = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

enum class Method { hybrid, lfm_only };

inline std::string method_name(Method m) { return m == Method::hybrid ? "hybrid" : "lfm_only"; }

struct EvalCell {
    Method method;
    std::size_t neighborhood;  // 0 for lfm_only
    std::size_t top_n;
    Metrics metrics;
    double customer_coverage = 0.0;  // fraction of test customers scored
};

struct EvalReport {
    std::vector<EvalCell> cells;
    std::string header_note;  // documentation only, not used in metrics
};

struct ExperimentInputs {
    const SimilarityMatrix* similarity = nullptr;  // required for hybrid
    const FactorModel* lfm = nullptr;
    std::vector<std::string> catalog_books;                         // candidate pool
    std::map<std::string, std::set<std::string>> train_purchases;   // per customer
    std::map<std::string, std::set<std::string>> test_purchases;    // truth T(u)
    bool exclude_purchased = true;
};

/// Score the test split for each method x neighborhood x top-N cell.
/// lfm_only ranks purely by the factor-model correlation.
inline EvalReport run_experiment(const ExperimentInputs& in, const std::vector<Method>& methods,
                                 const std::vector<std::size_t>& neighborhood_sizes,
                                 const std::vector<std::size_t>& list_sizes) {
    if (!in.lfm) throw ModelError("run_experiment: missing factor model");
    if (in.test_purchases.empty()) throw ModelError("run_experiment: empty test split");

    EvalReport report;
    for (Method method : methods) {
        if (method == Method::hybrid && !in.similarity)
            throw ModelError("run_experiment: missing similarity matrix");
        std::vector<std::size_t> n_list =
            method == Method::hybrid ? neighborhood_sizes : std::vector<std::size_t>{0};
        for (std::size_t n : n_list) {
            // Recommendations per customer for the largest list size; smaller
            // lists are prefixes of the same ranking.
            std::size_t max_top = 0;
            for (std::size_t t : list_sizes) max_top = std::max(max_top, t);
            std::map<std::string, std::vector<std::string>> ranked;
            std::size_t scored = 0;
            for (const auto& [cid, truth] : in.test_purchases) {
                if (truth.empty()) continue;
                std::set<std::string> purchased;
                auto tp = in.train_purchases.find(cid);
                if (tp != in.train_purchases.end()) purchased = tp->second;
                std::vector<std::string> recs;
                if (method == Method::hybrid) {
                    HybridConfig hc;
                    hc.neighborhood_size = n;
                    hc.top_n = max_top;
                    hc.exclude_purchased = in.exclude_purchased;
                    auto r = recommend_top_n(cid, in.catalog_books, hc, *in.similarity, *in.lfm,
                                             purchased);
                    for (auto& item : r.items) recs.push_back(item.book_id);
                } else {
                    std::vector<std::pair<std::string, double>> cand;
                    for (const auto& bid : in.catalog_books) {
                        if (in.exclude_purchased && purchased.count(bid)) continue;
                        cand.emplace_back(bid, in.lfm->predict(cid, bid).value);
                    }
                    std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
                        if (a.second != b.second) return a.second > b.second;
                        return a.first < b.first;
                    });
                    if (cand.size() > max_top) cand.resize(max_top);
                    for (auto& [bid, s] : cand) recs.push_back(bid);
                }
                ranked[cid] = std::move(recs);
                ++scored;
            }
            for (std::size_t top : list_sizes) {
                std::map<std::string, std::vector<std::string>> cut;
                for (const auto& [cid, recs] : ranked) {
                    auto r = recs;
                    if (r.size() > top) r.resize(top);
                    cut[cid] = std::move(r);
                }
                EvalCell cell;
                cell.method = method;
                cell.neighborhood = n;
                cell.top_n = top;
                cell.metrics = precision_recall_f(cut, in.test_purchases);
                std::size_t eligible = 0;
                for (const auto& [cid, t] : in.test_purchases)
                    if (!t.empty()) ++eligible;
                cell.customer_coverage =
                    eligible ? static_cast<double>(scored) / static_cast<double>(eligible) : 0.0;
                report.cells.push_back(cell);
            }
        }
    }
    return report;
}

namespace detail {

inline std::string fmt(double x) {
    std::ostringstream s;
    s << std::setprecision(10) << x;
    return s.str();
}

// One 800x600 SVG line chart: neighborhood size on x, one polyline per method.
inline std::string render_svg(const EvalReport& report, const std::string& metric) {
    auto value_of = [&](const Metrics& m) {
        return metric == "precision" ? m.precision : metric == "recall" ? m.recall : m.f;
    };
    // series: method name -> sorted (neighborhood, value), first top_n only.
    std::size_t first_top = report.cells.empty() ? 0 : report.cells.front().top_n;
    std::map<std::string, std::map<std::size_t, double>> series;
    for (const auto& c : report.cells)
        if (c.top_n == first_top) series[method_name(c.method)][c.neighborhood] = value_of(c.metrics);

    std::size_t min_n = SIZE_MAX, max_n = 0;
    for (auto& [name, pts] : series)
        for (auto& [n, v] : pts) {
            min_n = std::min(min_n, n);
            max_n = std::max(max_n, n);
        }
    if (series.empty() || min_n == SIZE_MAX) {
        min_n = 0;
        max_n = 1;
    }
    const double x0 = 80, x1 = 760, y0 = 540, y1 = 60;
    auto sx = [&](std::size_t n) {
        if (max_n == min_n) return (x0 + x1) / 2.0;
        return x0 + (x1 - x0) * static_cast<double>(n - min_n) /
                        static_cast<double>(max_n - min_n);
    };
    auto sy = [&](double v) { return y0 + (y1 - y0) * v; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
           "viewBox=\"0 0 800 600\">\n";
    svg << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"400\" y=\"580\" text-anchor=\"middle\">neighborhood size N</text>\n";
    svg << "<text x=\"20\" y=\"300\" text-anchor=\"middle\" transform=\"rotate(-90 20 300)\">"
        << metric << "</text>\n";
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::size_t ci = 0;
    for (auto& [name, pts] : series) {
        const char* color = colors[ci % 4];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        bool first = true;
        for (auto& [n, v] : pts) {
            if (!first) svg << ' ';
            svg << fmt(sx(n)) << ',' << fmt(sy(v));
            first = false;
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << (x0 + 10) << "\" y=\"" << (y1 + 20 * static_cast<double>(ci))
            << "\" fill=\"" << color << "\">" << name << "</text>\n";
        ++ci;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace detail

/// Write metrics.csv and one SVG chart per metric. Output is byte-stable
/// across runs of the same report.
inline void emit_report(const EvalReport& report, const std::filesystem::path& out_dir) {
    if (report.cells.empty()) throw ModelError("emit_report: empty report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream csv(out_dir / "metrics.csv", std::ios::binary);
    if (!csv) throw ModelError("emit_report: cannot write to " + out_dir.string());
    if (!report.header_note.empty()) csv << "# " << report.header_note << "\n";
    csv << "method,neighborhood,topn,precision,recall,f\n";
    for (const auto& c : report.cells) {
        csv << method_name(c.method) << ',' << c.neighborhood << ',' << c.top_n << ','
            << detail::fmt(c.metrics.precision) << ',' << detail::fmt(c.metrics.recall) << ','
            << detail::fmt(c.metrics.f) << '\n';
    }
    csv.close();
    for (const std::string metric : {"precision", "recall", "f"}) {
        std::ofstream svg(out_dir / (metric + ".svg"), std::ios::binary);
        if (!svg) throw ModelError("emit_report: cannot write to " + out_dir.string());
        svg << detail::render_svg(report, metric);
    }
}

}  // namespace bookrec
