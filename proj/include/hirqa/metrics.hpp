#pragma once

// Rank-correlation and density-separation analysis, plus the report/figure
// exporters behind the eval and separate commands.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hirqa/binio.hpp"
#include "hirqa/error.hpp"

namespace hirqa {

inline double plcc(const std::vector<double>& pred, const std::vector<double>& ref) {
    if (pred.size() != ref.size() || pred.size() < 3) raise(Errc::invalid_argument, "plcc needs matched inputs, n >= 3");
    double mp = 0.0, mr = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        mp += pred[i];
        mr += ref[i];
    }
    mp /= pred.size();
    mr /= ref.size();
    double num = 0.0, vp = 0.0, vr = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double a = pred[i] - mp, b = ref[i] - mr;
        num += a * b;
        vp += a * a;
        vr += b * b;
    }
    if (vp <= 0.0 || vr <= 0.0) raise(Errc::invalid_argument, "plcc undefined for zero-variance input");
    return num / (std::sqrt(vp) * std::sqrt(vr));
}

// Average ranks (fractional for ties).
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

// Spearman: Pearson correlation of average ranks; reduces to the
// 1 - 6*sum(d^2)/(N(N^2-1)) form when there are no ties.
inline double srocc(const std::vector<double>& pred, const std::vector<double>& ref) {
    if (pred.size() != ref.size() || pred.size() < 3) raise(Errc::invalid_argument, "srocc needs matched inputs, n >= 3");
    return plcc(average_ranks(pred), average_ranks(ref));
}

// Histogram intersection of the two score sets over their pooled min-max
// range. Each histogram is normalized to unit mass first.
inline double overlap(const std::vector<double>& high, const std::vector<double>& low, int bins) {
    if (high.empty() || low.empty()) raise(Errc::invalid_argument, "overlap needs nonempty score sets");
    if (bins < 2) raise(Errc::invalid_argument, "overlap needs at least 2 bins");
    double lo = high[0], hi = high[0];
    for (double v : high) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : low) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) return 1.0; // all scores identical: full overlap
    auto histogram = [&](const std::vector<double>& vals) {
        std::vector<double> h(bins, 0.0);
        for (double v : vals) {
            int b = static_cast<int>((v - lo) / (hi - lo) * bins);
            b = std::clamp(b, 0, bins - 1);
            h[b] += 1.0;
        }
        for (double& x : h) x /= static_cast<double>(vals.size());
        return h;
    };
    auto ha = histogram(high), hb = histogram(low);
    double acc = 0.0;
    for (int b = 0; b < bins; ++b) acc += std::min(ha[b], hb[b]);
    return acc;
}

// ---------------------------------------------------------------------------

struct ScoreSummary {
    std::size_t n = 0;
    double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
};

inline ScoreSummary summarize_scores(const std::vector<double>& v) {
    ScoreSummary s;
    s.n = v.size();
    if (v.empty()) return s;
    s.min = s.max = v[0];
    for (double x : v) {
        s.mean += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean /= v.size();
    for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(s.stddev / v.size());
    return s;
}

struct EvalReport {
    double srocc = 0.0;
    double plcc = 0.0;
    std::size_t n = 0;
    ScoreSummary pred_summary, ref_summary;
    bool has_overlap = false;
    double overlap_fraction = 0.0;
    int histogram_bins = 0;
    ScoreSummary high_summary, low_summary;
};

inline nlohmann::json summary_json(const ScoreSummary& s) {
    return {{"n", s.n}, {"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max}};
}

inline nlohmann::json report_json(const EvalReport& r) {
    nlohmann::json j;
    j["n"] = r.n;
    j["srocc"] = r.srocc;
    j["plcc"] = r.plcc;
    j["pred"] = summary_json(r.pred_summary);
    j["ref"] = summary_json(r.ref_summary);
    if (r.has_overlap) {
        j["overlap_fraction"] = r.overlap_fraction;
        j["histogram_bins"] = r.histogram_bins;
        j["high"] = summary_json(r.high_summary);
        j["low"] = summary_json(r.low_summary);
    }
    return j;
}

// ---------------------------------------------------------------------------
// CSV (RFC-4180 subset): fields quoted when they contain comma, quote, CR
// or LF; doubles printed with enough digits to round-trip.

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

// shortest decimal form that parses back to the same double
inline std::string format_double(double v) {
    for (int prec = 15; prec <= 17; ++prec) {
        std::ostringstream os;
        os.precision(prec);
        os << v;
        if (std::stod(os.str()) == v) return os.str();
    }
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct ScoreRow {
    std::string id;
    double severity = 0.0;
    double score = 0.0;
};

inline std::string encode_scores_csv(const std::vector<ScoreRow>& rows) {
    std::string out = "id,severity,q\n";
    for (const auto& r : rows)
        out += csv_escape(r.id) + "," + format_double(r.severity) + "," + format_double(r.score) + "\n";
    return out;
}

inline std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::vector<ScoreRow> decode_scores_csv(const std::string& text) {
    std::vector<ScoreRow> rows;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line != "id,severity,q") raise(Errc::corrupt_data, "unexpected score CSV header");
            continue;
        }
        auto f = parse_csv_line(line);
        if (f.size() != 3) raise(Errc::corrupt_data, "malformed score CSV row");
        rows.push_back({f[0], std::stod(f[1]), std::stod(f[2])});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Histogram-overlap figure (SVG 1.1): one polygon per score set plus an
// overlap annotation.

inline std::string overlap_svg(const std::vector<double>& high, const std::vector<double>& low, int bins,
                               double overlap_fraction) {
    double lo = high[0], hi = high[0];
    for (double v : high) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : low) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;
    auto histogram = [&](const std::vector<double>& vals) {
        std::vector<double> h(bins, 0.0);
        for (double v : vals) {
            int b = std::clamp(static_cast<int>((v - lo) / (hi - lo) * bins), 0, bins - 1);
            h[b] += 1.0;
        }
        for (double& x : h) x /= static_cast<double>(vals.size());
        return h;
    };
    auto ha = histogram(high), hb = histogram(low);
    double peak = 1e-9;
    for (int b = 0; b < bins; ++b) peak = std::max({peak, ha[b], hb[b]});

    const int W = 640, H = 360, ml = 50, mr = 20, mt = 40, mb = 40;
    auto poly = [&](const std::vector<double>& h) {
        std::ostringstream pts;
        pts << ml << "," << (H - mb) << " ";
        for (int b = 0; b < bins; ++b) {
            double x = ml + (static_cast<double>(b) + 0.5) / bins * (W - ml - mr);
            double y = (H - mb) - h[b] / peak * (H - mt - mb);
            pts << x << "," << y << " ";
        }
        pts << (W - mr) << "," << (H - mb);
        return pts.str();
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H
        << "\">\n";
    svg << "  <rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    svg << "  <polygon points=\"" << poly(ha) << "\" fill=\"rgba(200,40,40,0.45)\" stroke=\"rgb(160,20,20)\"/>\n";
    svg << "  <polygon points=\"" << poly(hb) << "\" fill=\"rgba(40,60,200,0.45)\" stroke=\"rgb(20,40,160)\"/>\n";
    svg << "  <text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">score density, "
        << bins << " bins, overlap " << format_double(overlap_fraction) << "</text>\n";
    svg << "  <text x=\"" << ml << "\" y=\"" << (H - 12)
        << "\" font-family=\"sans-serif\" font-size=\"12\">high-quality set (red) vs low-quality set (blue), range ["
        << format_double(lo) << ", " << format_double(hi) << "]</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

// Writes the report JSON, score CSV, optional embeddings CSV and the SVG
// figure when overlap data is present. Returns the list of files written.
inline std::vector<std::string> export_report(const EvalReport& report, const std::vector<ScoreRow>& scores,
                                              const std::vector<std::pair<std::string, std::vector<double>>>& embeddings,
                                              const std::vector<double>& high, const std::vector<double>& low,
                                              const std::string& out_dir) {
    std::vector<std::string> written;
    nlohmann::json j = report_json(report);

    std::string scores_path = out_dir + "/scores.csv";
    write_file_text(scores_path, encode_scores_csv(scores));
    written.push_back(scores_path);

    if (!embeddings.empty()) {
        std::string emb_path = out_dir + "/embeddings.csv";
        std::string text = "id";
        for (std::size_t k = 0; k < embeddings[0].second.size(); ++k) text += ",f" + std::to_string(k);
        text += "\n";
        for (const auto& [id, vec] : embeddings) {
            text += csv_escape(id);
            for (double v : vec) text += "," + format_double(v);
            text += "\n";
        }
        write_file_text(emb_path, text);
        written.push_back(emb_path);
    } else {
        j["embeddings_file"] = nullptr;
    }

    if (report.has_overlap && !high.empty() && !low.empty()) {
        std::string svg_path = out_dir + "/overlap.svg";
        write_file_text(svg_path, overlap_svg(high, low, report.histogram_bins, report.overlap_fraction));
        written.push_back(svg_path);
    }

    std::string json_path = out_dir + "/report.json";
    write_file_text(json_path, j.dump(2) + "\n");
    written.push_back(json_path);
    return written;
}

} // namespace hirqa
