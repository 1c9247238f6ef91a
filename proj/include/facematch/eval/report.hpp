#pragma once

#include "facematch/core/error.hpp"
#include "facematch/core/text_io.hpp"
#include "facematch/eval/experiment.hpp"
#include "facematch/eval/roc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace facematch {
namespace eval {

inline std::string table_csv_header() { return "architecture,traits,auc_mean,auc_std,eer_mean,eer_std"; }

inline void write_table_csv(const std::filesystem::path& path, const ExperimentReport& r, const std::string& digest)
{
    auto out = open_output(path);
    out << artifact_header("table", digest) << '\n' << table_csv_header() << '\n';
    for (const auto& row : r.rows) {
        out << display_name(row.architecture) << ',' << row.traits.name() << ',' << format_double(row.auc_mean) << ',' << format_double(row.auc_std)
            << ',' << format_double(row.eer_mean) << ',' << format_double(row.eer_std) << '\n';
    }
}

inline std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// Architectures as rows, trait sets as columns, "AUC ± std / EER ± std" cells.
inline std::string render_table_markdown(const ExperimentReport& r)
{
    std::vector<Architecture> archs;
    std::vector<TraitSet> traits;
    for (const auto& row : r.rows) {
        if (std::find(archs.begin(), archs.end(), row.architecture) == archs.end()) archs.push_back(row.architecture);
        if (std::find(traits.begin(), traits.end(), row.traits) == traits.end()) traits.push_back(row.traits);
    }
    std::ostringstream s;
    s << "| architecture |";
    for (const auto& t : traits) s << ' ' << t.name() << " |";
    s << "\n|---|";
    for (std::size_t k = 0; k < traits.size(); ++k) s << "---|";
    s << '\n';
    for (auto a : archs) {
        s << "| " << display_name(a) << " |";
        for (const auto& t : traits) {
            const auto& row = r.row(a, t);
            s << " AUC " << fixed(row.auc_mean, 3) << " ± " << fixed(row.auc_std, 3) << "<br>EER " << fixed(row.eer_mean, 3) << " ± "
              << fixed(row.eer_std, 3) << " |";
        }
        s << '\n';
    }
    return s.str();
}

inline void write_fold_csv(const std::filesystem::path& path, const ExperimentReport& r, const std::string& digest)
{
    auto out = open_output(path);
    out << artifact_header("folds", digest) << '\n' << "architecture,traits,fold,auc,eer,genuine,imposter\n";
    for (const auto& row : r.rows) {
        for (std::size_t f = 0; f < row.fold_roc.size(); ++f) {
            const auto& roc = row.fold_roc[f];
            out << display_name(row.architecture) << ',' << row.traits.name() << ',' << f + 1 << ',' << format_double(roc.auc) << ','
                << format_double(roc.eer) << ',' << roc.genuine_count << ',' << roc.imposter_count << '\n';
        }
    }
}

inline std::string roc_file_name(Architecture a, const TraitSet& t, const std::string& fold)
{
    return "roc_" + to_string(a) + "_" + t.name() + "_" + fold + ".csv";
}

inline void write_roc_csv(const std::filesystem::path& path, const RocSummary& roc, const std::string& digest)
{
    auto out = open_output(path);
    out << artifact_header("roc", digest) << '\n' << "threshold,fpr,tpr\n";
    for (std::size_t k = 0; k < roc.tpr.size(); ++k) {
        out << (std::isinf(roc.thresholds[k]) ? std::string("inf") : format_double(roc.thresholds[k])) << ',' << format_double(roc.fpr[k]) << ','
            << format_double(roc.tpr[k]) << '\n';
    }
}

struct RocCurve
{
    std::vector<double> fpr;
    std::vector<double> tpr;
};

inline RocCurve read_roc_csv(const std::filesystem::path& path)
{
    auto in = open_input(path);
    LineReader reader(in, path.string());
    std::string line;
    if (!reader.next(line) || line != "threshold,fpr,tpr") {
        reader.fail("header must be threshold,fpr,tpr");
    }
    RocCurve c;
    while (reader.next(line)) {
        const auto cols = split(line, ',');
        double fpr = 0.0;
        double tpr = 0.0;
        if (cols.size() != 3 || !parse_double(cols[1], fpr) || !parse_double(cols[2], tpr)) {
            reader.fail("expected threshold,fpr,tpr");
        }
        if (fpr < 0.0 || fpr > 1.0 || tpr < 0.0 || tpr > 1.0) {
            reader.fail("rates must lie in [0, 1]");
        }
        c.fpr.push_back(fpr);
        c.tpr.push_back(tpr);
    }
    if (c.fpr.size() < 2) {
        reader.fail("an ROC curve needs at least two points");
    }
    return c;
}

inline void write_gb_correlation_csv(const std::filesystem::path& path, const Eigen::MatrixXd& r, const std::string& digest)
{
    auto out = open_output(path);
    out << artifact_header("gb_correlation", digest) << '\n' << "component";
    for (Eigen::Index c = 0; c < r.cols(); ++c) out << ",gb_" << c + 1;
    out << '\n';
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        out << "gb_" << i + 1;
        for (Eigen::Index j = 0; j < r.cols(); ++j) {
            out << ',' << (std::isnan(r(i, j)) ? std::string("undefined") : format_double(r(i, j)));
        }
        out << '\n';
    }
}

// SVG rendering.

struct PlotCurve
{
    std::string label;
    std::string color;
    bool dashed = false;
    double auc = 0.0;
    RocCurve points;
};

struct PlotPanel
{
    std::string title;
    std::vector<PlotCurve> curves;
};

inline std::string architecture_color(Architecture a) { return uses_gml(a) ? "#c0392b" : "#2e6da4"; }
/// Baseline (NB fuser) curves are dashed, neural-fusion curves solid.
inline bool architecture_dashed(Architecture a) { return !uses_fusion_net(a); }

/// At most max_points points, always keeping the first and last.
inline RocCurve thin_curve(const RocCurve& c, std::size_t max_points = 200)
{
    if (c.fpr.size() <= max_points) {
        return c;
    }
    RocCurve out;
    const double step = static_cast<double>(c.fpr.size() - 1) / static_cast<double>(max_points - 1);
    for (std::size_t k = 0; k < max_points; ++k) {
        const auto i = static_cast<std::size_t>(std::lround(step * static_cast<double>(k)));
        out.fpr.push_back(c.fpr[i]);
        out.tpr.push_back(c.tpr[i]);
    }
    return out;
}

inline std::string render_roc_svg(const std::vector<PlotPanel>& panels, const std::string& digest)
{
    const int cols = std::min<int>(4, std::max<int>(1, static_cast<int>(panels.size())));
    const int rows = static_cast<int>((panels.size() + static_cast<std::size_t>(cols) - 1) / static_cast<std::size_t>(cols));
    const double size = 220.0;
    const double pad = 40.0;
    const double cell_w = size + 2 * pad;
    const double cell_h = size + 2 * pad + 60.0;
    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s << "<!-- facematch roc v" << format_version << " config=" << (digest.empty() ? "none" : digest) << " -->\n";
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * cell_w << "\" height=\"" << std::max(rows, 1) * cell_h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double ox = static_cast<double>(static_cast<int>(p) % cols) * cell_w + pad;
        const double oy = static_cast<double>(static_cast<int>(p) / cols) * cell_h + pad;
        auto px = [&](double fpr) { return ox + fpr * size; };
        auto py = [&](double tpr) { return oy + (1.0 - tpr) * size; };
        s << "<g>\n<text x=\"" << ox + size / 2 << "\" y=\"" << oy - 12 << "\" text-anchor=\"middle\" font-size=\"13\">" << panel.title << "</text>\n";
        s << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << size << "\" height=\"" << size << "\" fill=\"none\" stroke=\"#333\"/>\n";
        s << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1) << "\" stroke=\"#bbb\" stroke-dasharray=\"2,3\"/>\n";
        for (double t : {0.0, 0.5, 1.0}) {
            s << "<text x=\"" << px(t) << "\" y=\"" << oy + size + 14 << "\" text-anchor=\"middle\">" << fixed(t, 1) << "</text>\n";
            s << "<text x=\"" << ox - 6 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">" << fixed(t, 1) << "</text>\n";
        }
        s << "<text x=\"" << ox + size / 2 << "\" y=\"" << oy + size + 28 << "\" text-anchor=\"middle\">false positive rate</text>\n";
        s << "<text transform=\"translate(" << ox - 28 << "," << oy + size / 2 << ") rotate(-90)\" text-anchor=\"middle\">true positive rate</text>\n";
        for (std::size_t c = 0; c < panel.curves.size(); ++c) {
            const auto& curve = panel.curves[c];
            const auto pts = thin_curve(curve.points);
            s << "<!-- data " << panel.title << " " << curve.label << " auc=" << format_double(curve.auc) << " fpr,tpr:";
            for (std::size_t k = 0; k < pts.fpr.size(); ++k) s << ' ' << format_g9(pts.fpr[k]) << ',' << format_g9(pts.tpr[k]);
            s << " -->\n<polyline fill=\"none\" stroke=\"" << curve.color << "\" stroke-width=\"1.6\"" << (curve.dashed ? " stroke-dasharray=\"6,4\"" : "")
              << " points=\"";
            for (std::size_t k = 0; k < pts.fpr.size(); ++k) s << (k ? " " : "") << fixed(px(pts.fpr[k]), 2) << ',' << fixed(py(pts.tpr[k]), 2);
            s << "\"/>\n";
            const double ly = oy + size + 42 + 12.0 * static_cast<double>(c / 2);
            const double lx = ox + static_cast<double>(c % 2) * size / 2;
            s << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 18 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << curve.color
              << "\" stroke-width=\"1.6\"" << (curve.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
            s << "<text x=\"" << lx + 22 << "\" y=\"" << ly << "\">" << curve.label << " " << fixed(curve.auc, 3) << "</text>\n";
        }
        s << "</g>\n";
    }
    s << "</svg>\n";
    return s.str();
}

/// One panel per trait set with the pooled curve of every architecture.
inline std::vector<PlotPanel> report_panels(const ExperimentReport& r)
{
    std::vector<PlotPanel> panels;
    for (const auto& row : r.rows) {
        auto it = std::find_if(panels.begin(), panels.end(), [&](const PlotPanel& p) { return p.title == row.traits.name(); });
        if (it == panels.end()) {
            panels.push_back({row.traits.name(), {}});
            it = panels.end() - 1;
        }
        PlotCurve c;
        c.label = display_name(row.architecture);
        c.color = architecture_color(row.architecture);
        c.dashed = architecture_dashed(row.architecture);
        c.auc = row.pooled.auc;
        c.points.fpr = row.pooled.fpr;
        c.points.tpr = row.pooled.tpr;
        it->curves.push_back(std::move(c));
    }
    return panels;
}

/// Writes table.csv, table.md, folds.csv, per-fold and pooled ROC CSVs and roc.svg.
inline void write_report(const std::filesystem::path& dir, const ExperimentReport& r, const std::string& digest)
{
    std::filesystem::create_directories(dir);
    write_table_csv(dir / "table.csv", r, digest);
    {
        auto out = open_output(dir / "table.md");
        out << "<!-- " << artifact_header("table", digest).substr(2) << " -->\n\n" << render_table_markdown(r);
    }
    write_fold_csv(dir / "folds.csv", r, digest);
    for (const auto& row : r.rows) {
        for (std::size_t f = 0; f < row.fold_roc.size(); ++f) {
            write_roc_csv(dir / roc_file_name(row.architecture, row.traits, std::to_string(f + 1)), row.fold_roc[f], digest);
        }
        write_roc_csv(dir / roc_file_name(row.architecture, row.traits, "pooled"), row.pooled, digest);
    }
    auto out = open_output(dir / "roc.svg");
    out << render_roc_svg(report_panels(r), digest);
}

} // namespace eval
} // namespace facematch
