#include "gftperc/outputs.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gftperc {

namespace {

bool needs_quoting(const std::string& cell) {
    return cell.find_first_of(",\"\r\n") != std::string::npos;
}

std::string csv_escape(const std::string& cell) {
    if (!needs_quoting(cell)) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    add_row(header);
    columns_ = header.size();
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
    if (columns_ != 0 && cells.size() != columns_)
        throw std::invalid_argument("CSV row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) content_ += ',';
        content_ += csv_escape(cells[i]);
    }
    content_ += "\r\n";
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string render_svg_plot(const std::string& title, const std::string& x_label,
                            const std::string& y_label, const std::vector<SvgSeries>& series) {
    const int width = 640, height = 420;
    const int ml = 60, mr = 20, mt = 40, mb = 50;
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const SvgSeries& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    if (x_min > x_max) { x_min = 0; x_max = 1; y_min = 0; y_max = 1; }
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max == y_min) y_max = y_min + 1;

    const auto px = [&](double x) {
        return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr);
    };
    const auto py = [&](double y) {
        return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           std::to_string(width) + "\" height=\"" + std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
    // Axes.
    svg += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(height - mb) +
           "\" x2=\"" + std::to_string(width - mr) + "\" y2=\"" + std::to_string(height - mb) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(mt) + "\" x2=\"" +
           std::to_string(ml) + "\" y2=\"" + std::to_string(height - mb) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"" + std::to_string(height - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + x_label +
           "</text>\n";
    svg += "<text x=\"16\" y=\"" + std::to_string(height / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 " + std::to_string(height / 2) + ")\">" + y_label +
           "</text>\n";
    // Axis extremes.
    svg += "<text x=\"" + std::to_string(ml) + "\" y=\"" + std::to_string(height - mb + 16) +
           "\" font-family=\"sans-serif\" font-size=\"10\">" + format_double(x_min) + "</text>\n";
    svg += "<text x=\"" + std::to_string(width - mr - 30) + "\" y=\"" +
           std::to_string(height - mb + 16) + "\" font-family=\"sans-serif\" font-size=\"10\">" +
           format_double(x_max) + "</text>\n";
    svg += "<text x=\"" + std::to_string(ml - 52) + "\" y=\"" + std::to_string(height - mb) +
           "\" font-family=\"sans-serif\" font-size=\"10\">" + format_double(y_min) + "</text>\n";
    svg += "<text x=\"" + std::to_string(ml - 52) + "\" y=\"" + std::to_string(mt + 4) +
           "\" font-family=\"sans-serif\" font-size=\"10\">" + format_double(y_max) + "</text>\n";

    const char* colors[] = {"#1f5fa8", "#c03028", "#2c8a4b", "#8958a8"};
    int color = 0;
    double legend_y = mt + 4;
    for (const SvgSeries& s : series) {
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            points += format_double(px(s.x[i]));
            points += ',';
            points += format_double(py(s.y[i]));
            points += ' ';
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(colors[color % 4]) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
        if (!s.label.empty()) {
            svg += "<text x=\"" + std::to_string(width - mr - 150) + "\" y=\"" +
                   format_double(legend_y) + "\" font-family=\"sans-serif\" font-size=\"11\" "
                   "fill=\"" + colors[color % 4] + "\">" + s.label + "</text>\n";
            legend_y += 14;
        }
        ++color;
    }
    svg += "</svg>\n";
    return svg;
}

std::string fnv1a_hex(const std::string& content) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : content) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunManifest::RunManifest(std::filesystem::path out_dir, std::string config_digest)
    : out_dir_(std::move(out_dir)), config_digest_(std::move(config_digest)) {
    std::filesystem::create_directories(out_dir_);
}

void RunManifest::write_file(const std::string& name, const std::string& content) {
    std::ofstream out(out_dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (out_dir_ / name).string());
    out << content;
    checksums_[name] = fnv1a_hex(content);
}

std::filesystem::path RunManifest::finalize(std::int64_t wall_clock_ms) {
    nlohmann::ordered_json manifest;
    manifest["config_digest"] = config_digest_;
    manifest["tool_version"] = "gftperc 1.0.0";
    nlohmann::ordered_json outputs;
    for (const auto& [name, checksum] : checksums_) outputs[name] = checksum;
    manifest["outputs"] = outputs;
    manifest["wall_clock_ms"] = wall_clock_ms;
    const std::filesystem::path path = out_dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    out << manifest.dump(2) << "\n";
    return path;
}

}  // namespace gftperc
