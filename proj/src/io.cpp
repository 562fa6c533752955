#include "permboot/io.hpp"

#include "permboot/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <system_error>

namespace permboot {

std::string format_real(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_real(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (text == "inf" || text == "+inf") return kInf;
    if (text == "-inf") return -kInf;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ContractError("cannot parse '" + std::string(text) + "' as a real number");
    }
    return value;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

SampleTable read_sample_table(std::istream& is) {
    std::string line;
    while (std::getline(is, line) && blank(line)) {
    }
    const auto header = split_csv_line(line);
    SampleKind kind;
    if (header == std::vector<std::string>{"group", "value"}) {
        kind = SampleKind::Plain;
    } else if (header == std::vector<std::string>{"group", "time", "status"}) {
        kind = SampleKind::Censored;
    } else {
        throw ContractError("CSV header must be 'group,value' or 'group,time,status'");
    }
    const std::size_t width = header.size();

    std::map<std::string, std::size_t> index;
    std::vector<std::vector<Observation>> groups;
    std::vector<std::string> labels;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (blank(line)) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != width) {
            throw ContractError("CSV line " + std::to_string(lineno) + ": expected " +
                                std::to_string(width) + " fields");
        }
        auto [it, inserted] = index.try_emplace(cells[0], groups.size());
        if (inserted) groups.emplace_back();
        Observation obs;
        try {
            obs.value = parse_real(cells[1]);
        } catch (const ContractError& e) {
            throw ContractError("CSV line " + std::to_string(lineno) + ": " + e.what());
        }
        if (kind == SampleKind::Censored) {
            if (cells[2] == "1") {
                obs.event = true;
            } else if (cells[2] == "0") {
                obs.event = false;
            } else {
                throw ContractError("CSV line " + std::to_string(lineno) + ": status must be 0 or 1");
            }
        }
        if (inserted) labels.push_back(cells[0]);
        groups[it->second].push_back(obs);
    }
    if (groups.empty()) throw ContractError("CSV has no observations");
    return SampleTable{kind, std::move(labels), std::move(groups)};
}

SampleTable read_sample_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open " + path.string());
    return read_sample_table(in);
}

MultiSampleData read_samples_csv(std::istream& is) {
    auto t = read_sample_table(is);
    return MultiSampleData(t.kind, std::move(t.groups));
}

MultiSampleData read_samples_csv(const std::filesystem::path& path) {
    auto t = read_sample_table(path);
    return MultiSampleData(t.kind, std::move(t.groups));
}

void write_samples_csv(std::ostream& os, const MultiSampleData& data) {
    const bool censored = data.kind() == SampleKind::Censored;
    os << (censored ? "group,time,status\n" : "group,value\n");
    for (std::size_t j = 0; j < data.num_groups(); ++j) {
        for (const auto& obs : data.group(j)) {
            os << (j + 1) << ',' << format_real(obs.value);
            if (censored) os << ',' << (obs.event ? 1 : 0);
            os << '\n';
        }
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " +
                                 ec.message());
    }
}

}  // namespace permboot
