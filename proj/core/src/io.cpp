#include "tbm/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace tbm {

std::string format_double(double v) {
    char buf[40];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

std::size_t read_order(std::istream& is, const char* what) {
    long long k = 0;
    if (!(is >> k) || k < 1) {
        throw ParseError(std::string(what) + ": expected order K >= 1");
    }
    return static_cast<std::size_t>(k);
}

std::vector<std::size_t> read_dims(std::istream& is, std::size_t order,
                                   const char* what) {
    std::vector<std::size_t> dims(order);
    for (std::size_t k = 0; k < order; ++k) {
        long long d = 0;
        if (!(is >> d) || d < 1) {
            throw ParseError(std::string(what) + ": bad dimension for mode " +
                             std::to_string(k));
        }
        dims[k] = static_cast<std::size_t>(d);
    }
    return dims;
}

std::vector<double> read_values(std::istream& is, std::size_t count,
                                const char* what) {
    std::vector<double> vals(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!(is >> vals[i])) {
            throw ParseError(std::string(what) + ": expected " +
                             std::to_string(count) + " values, got " +
                             std::to_string(i));
        }
    }
    return vals;
}

void expect_eof(std::istream& is, const char* what) {
    std::string trailing;
    if (is >> trailing) {
        throw ParseError(std::string(what) + ": trailing data '" + trailing +
                         "'");
    }
}

void write_values(std::ostream& os, const std::vector<double>& vals) {
    constexpr std::size_t per_line = 8;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        os << format_double(vals[i]);
        os << ((i + 1) % per_line == 0 || i + 1 == vals.size() ? '\n' : ' ');
    }
}

}  // namespace

void write_tsr(std::ostream& os, const Tensor& t) {
    os << t.order() << '\n';
    for (std::size_t k = 0; k < t.order(); ++k) {
        os << t.dim(k) << (k + 1 == t.order() ? '\n' : ' ');
    }
    write_values(os, t.data());
}

Tensor read_tsr(std::istream& is) {
    const std::size_t order = read_order(is, ".tsr");
    std::vector<std::size_t> dims = read_dims(is, order, ".tsr");
    std::size_t total = 1;
    for (std::size_t d : dims) total *= d;
    std::vector<double> vals = read_values(is, total, ".tsr");
    expect_eof(is, ".tsr");
    return Tensor(std::move(dims), std::move(vals));
}

void write_tbm(std::ostream& os, const BlockModel& m) {
    m.validate();
    os << m.core.order() << '\n';
    for (std::size_t k = 0; k < m.core.order(); ++k) {
        os << m.core.dim(k) << (k + 1 == m.core.order() ? '\n' : ' ');
    }
    for (const Membership& mem : m.memberships) {
        for (std::size_t i = 0; i < mem.size(); ++i) {
            os << mem.label(i) << (i + 1 == mem.size() ? '\n' : ' ');
        }
    }
    write_values(os, m.core.data());
}

BlockModel read_tbm(std::istream& is) {
    const std::size_t order = read_order(is, ".tbm");
    std::vector<std::size_t> ranks = read_dims(is, order, ".tbm");
    is >> std::ws;

    std::vector<Membership> memberships;
    memberships.reserve(order);
    for (std::size_t k = 0; k < order; ++k) {
        std::string line;
        if (!std::getline(is, line) || line.empty()) {
            throw ParseError(".tbm: missing label line for mode " +
                             std::to_string(k));
        }
        std::istringstream ls(line);
        std::vector<int> labels;
        int l = 0;
        while (ls >> l) labels.push_back(l);
        if (!ls.eof()) {
            throw ParseError(".tbm: bad label in mode " + std::to_string(k));
        }
        try {
            memberships.emplace_back(std::move(labels),
                                     static_cast<int>(ranks[k]));
        } catch (const std::invalid_argument& e) {
            throw ParseError(".tbm: invalid membership for mode " +
                             std::to_string(k) + ": " + e.what());
        }
    }

    std::size_t total = 1;
    for (std::size_t r : ranks) total *= r;
    std::vector<double> vals = read_values(is, total, ".tbm");
    expect_eof(is, ".tbm");
    try {
        BlockModel m{Tensor(std::move(ranks), std::move(vals)),
                     std::move(memberships)};
        m.validate();
        return m;
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string(".tbm: ") + e.what());
    }
}

namespace {

template <typename Fn>
void write_file(const std::string& path, Fn&& fn) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    fn(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::ifstream open_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open: " + path);
    return is;
}

}  // namespace

void write_tsr_file(const std::string& path, const Tensor& t) {
    write_file(path, [&](std::ostream& os) { write_tsr(os, t); });
}

Tensor read_tsr_file(const std::string& path) {
    std::ifstream is = open_file(path);
    try {
        return read_tsr(is);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_tbm_file(const std::string& path, const BlockModel& m) {
    write_file(path, [&](std::ostream& os) { write_tbm(os, m); });
}

BlockModel read_tbm_file(const std::string& path) {
    std::ifstream is = open_file(path);
    try {
        return read_tbm(is);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace tbm
