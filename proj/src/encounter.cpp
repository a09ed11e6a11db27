#include "conjassess/encounter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace conjassess::encounter {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void validate(const ConjunctionState& state) {
    if (!std::isfinite(state.x.x) || !std::isfinite(state.x.y))
        throw std::invalid_argument("ConjunctionState: non-finite miss vector");
    numerics::require_pd(state.cov, "ConjunctionState");
    if (!(std::isfinite(state.hbr)) || state.hbr < 0.0)
        throw std::invalid_argument("ConjunctionState: hbr must be finite and non-negative");
}

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

namespace {

Vec3 sub(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 scale3(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
double dot3(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 cross3(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
Vec3 mat_mul(const Mat3& m, Vec3 v) {
    return {m.m[0][0] * v.x + m.m[0][1] * v.y + m.m[0][2] * v.z,
            m.m[1][0] * v.x + m.m[1][1] * v.y + m.m[1][2] * v.z,
            m.m[2][0] * v.x + m.m[2][1] * v.y + m.m[2][2] * v.z};
}

}  // namespace

PolarMiss to_polar(Vec2 xi) {
    if (!std::isfinite(xi.x) || !std::isfinite(xi.y))
        throw std::invalid_argument("to_polar: non-finite input");
    PolarMiss p;
    p.psi = xi.norm();
    if (p.psi == 0.0) {
        p.lambda_angle = 0.0;
        return p;
    }
    double lam = std::atan2(xi.y, xi.x);
    if (lam < 0.0) lam += kTwoPi;
    if (lam >= kTwoPi) lam = 0.0;
    p.lambda_angle = lam;
    return p;
}

Vec2 from_polar(const PolarMiss& p) {
    return {p.psi * std::cos(p.lambda_angle), p.psi * std::sin(p.lambda_angle)};
}

ConjunctionState project_to_encounter_plane(const CdmRecord& rec) {
    const double vnorm = rec.rel_velocity.norm();
    if (!(vnorm > 0.0))
        throw std::runtime_error("project_to_encounter_plane: zero relative velocity (event " +
                                 rec.event_id + ")");

    // Symmetrize; reject asymmetry beyond 1e-9 relative to the largest entry.
    double max_abs = 0.0, max_asym = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            max_abs = std::max(max_abs, std::abs(rec.pos_cov.m[i][j]));
            max_asym = std::max(max_asym, std::abs(rec.pos_cov.m[i][j] - rec.pos_cov.m[j][i]));
        }
    if (max_abs > 0.0 && max_asym > 1e-9 * max_abs)
        throw std::invalid_argument(
            "project_to_encounter_plane: position covariance asymmetry exceeds 1e-9 relative "
            "(event " + rec.event_id + ")");
    Mat3 sym;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            sym.m[i][j] = 0.5 * (rec.pos_cov.m[i][j] + rec.pos_cov.m[j][i]);

    const Vec3 vhat = scale3(1.0 / vnorm, rec.rel_velocity);
    const Vec3 p = rec.rel_position;
    Vec3 perp = sub(p, scale3(dot3(p, vhat), vhat));
    Vec3 e1;
    const double pnorm = p.norm();
    if (perp.norm() > 1e-12 * std::max(pnorm, 1.0)) {
        e1 = scale3(1.0 / perp.norm(), perp);
    } else {
        // Degenerate direction: seed from the axis of the smallest |vhat| component.
        Vec3 axis{1.0, 0.0, 0.0};
        double best = std::abs(vhat.x);
        if (std::abs(vhat.y) < best) { axis = {0.0, 1.0, 0.0}; best = std::abs(vhat.y); }
        if (std::abs(vhat.z) < best) axis = {0.0, 0.0, 1.0};
        Vec3 seed = sub(axis, scale3(dot3(axis, vhat), vhat));
        e1 = scale3(1.0 / seed.norm(), seed);
    }
    const Vec3 e2 = cross3(vhat, e1);

    ConjunctionState out;
    out.x = {dot3(e1, p), dot3(e2, p)};
    const Vec3 me1 = mat_mul(sym, e1), me2 = mat_mul(sym, e2);
    out.cov = {dot3(e1, me1), dot3(e1, me2), dot3(e2, me2)};
    out.hbr = rec.hbr;
    if (!out.cov.positive_definite())
        throw std::runtime_error(
            "project_to_encounter_plane: projected covariance is not positive definite "
            "(event " + rec.event_id + ")");
    return out;
}

namespace {

struct RawLine {
    int number = 0;
    std::string key;
    std::string value;
    std::string unit;
};

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(int line, const std::string& msg) {
    throw std::invalid_argument("KVN line " + std::to_string(line) + ": " + msg);
}

double parse_number(const RawLine& ln) {
    const std::string v = ln.value;
    size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        parse_fail(ln.number, "cannot parse number for key " + ln.key + ": '" + v + "'");
    }
    if (pos != v.size() || !std::isfinite(out))
        parse_fail(ln.number, "cannot parse number for key " + ln.key + ": '" + v + "'");
    return out;
}

double unit_factor(const RawLine& ln, std::initializer_list<std::pair<const char*, double>> table,
                   double default_factor) {
    if (ln.unit.empty()) return default_factor;
    for (const auto& [name, factor] : table)
        if (ln.unit == name) return factor;
    parse_fail(ln.number, "unsupported unit [" + ln.unit + "] for key " + ln.key);
}

bool valid_iso8601(const std::string& s) {
    // YYYY-MM-DDTHH:MM:SS with optional fractional seconds and optional Z.
    if (s.size() < 19) return false;
    auto digit = [&](size_t i) { return std::isdigit(static_cast<unsigned char>(s[i])) != 0; };
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u, 11u, 12u, 14u, 15u, 17u, 18u})
        if (!digit(i)) return false;
    if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't') || s[13] != ':' ||
        s[16] != ':')
        return false;
    size_t i = 19;
    if (i < s.size() && s[i] == '.') {
        ++i;
        if (i >= s.size() || !digit(i)) return false;
        while (i < s.size() && digit(i)) ++i;
    }
    if (i < s.size() && (s[i] == 'Z' || s[i] == 'z')) ++i;
    return i == s.size();
}

CdmRecord build_record(const std::vector<RawLine>& lines, int block_line) {
    static const char* const kMandatory[] = {
        "EVENT_ID",       "TCA",            "REL_POSITION_X", "REL_POSITION_Y",
        "REL_POSITION_Z", "REL_VELOCITY_X", "REL_VELOCITY_Y", "REL_VELOCITY_Z",
        "CXX",            "CYY",            "CZZ",            "CXY",
        "CXZ",            "CYZ",            "HBR"};

    std::vector<const RawLine*> found(std::size(kMandatory), nullptr);
    for (const RawLine& ln : lines) {
        for (size_t k = 0; k < std::size(kMandatory); ++k) {
            if (ln.key == kMandatory[k]) {
                if (found[k]) parse_fail(ln.number, "duplicate key " + ln.key);
                found[k] = &ln;
            }
        }
    }
    for (size_t k = 0; k < std::size(kMandatory); ++k)
        if (!found[k])
            throw std::invalid_argument("KVN record starting at line " +
                                        std::to_string(block_line) + ": missing key " +
                                        std::string(kMandatory[k]));

    const auto length = [&](size_t k) {
        return parse_number(*found[k]) * unit_factor(*found[k], {{"m", 1.0}, {"km", 1e3}}, 1.0);
    };
    const auto velocity = [&](size_t k) {
        return parse_number(*found[k]) *
               unit_factor(*found[k], {{"m/s", 1.0}, {"km/s", 1e3}}, 1.0);
    };
    const auto covariance = [&](size_t k) {
        return parse_number(*found[k]) *
               unit_factor(*found[k],
                           {{"m**2", 1.0}, {"m^2", 1.0}, {"km**2", 1e6}, {"km^2", 1e6}}, 1.0);
    };

    CdmRecord rec;
    rec.event_id = found[0]->value;
    rec.tca = found[1]->value;
    if (!valid_iso8601(rec.tca))
        parse_fail(found[1]->number, "TCA is not an ISO-8601 timestamp: '" + rec.tca + "'");
    rec.rel_position = {length(2), length(3), length(4)};
    rec.rel_velocity = {velocity(5), velocity(6), velocity(7)};
    const double cxx = covariance(8), cyy = covariance(9), czz = covariance(10);
    const double cxy = covariance(11), cxz = covariance(12), cyz = covariance(13);
    rec.pos_cov.m[0][0] = cxx; rec.pos_cov.m[1][1] = cyy; rec.pos_cov.m[2][2] = czz;
    rec.pos_cov.m[0][1] = rec.pos_cov.m[1][0] = cxy;
    rec.pos_cov.m[0][2] = rec.pos_cov.m[2][0] = cxz;
    rec.pos_cov.m[1][2] = rec.pos_cov.m[2][1] = cyz;
    rec.hbr = parse_number(*found[14]) * unit_factor(*found[14], {{"m", 1.0}}, 1.0);
    return rec;
}

}  // namespace

std::vector<CdmRecord> parse_cdm_kvn(std::istream& in, bool lenient,
                                     std::vector<std::string>* diagnostics) {
    std::vector<CdmRecord> records;
    std::vector<RawLine> block;
    int block_line = 0;
    int line_no = 0;
    std::string line;

    const auto flush_block = [&]() {
        if (block.empty()) return;
        try {
            records.push_back(build_record(block, block_line));
        } catch (const std::invalid_argument& e) {
            if (!lenient) throw;
            if (diagnostics) diagnostics->push_back(e.what());
        }
        block.clear();
    };

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) {
            flush_block();
            continue;
        }
        if (t.rfind("COMMENT", 0) == 0) continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos) {
            if (lenient) {
                if (diagnostics)
                    diagnostics->push_back("KVN line " + std::to_string(line_no) +
                                           ": not a KEY = VALUE line: '" + t + "'");
                continue;
            }
            parse_fail(line_no, "not a KEY = VALUE line: '" + t + "'");
        }
        RawLine raw;
        raw.number = line_no;
        raw.key = trim(t.substr(0, eq));
        std::string rest = trim(t.substr(eq + 1));
        if (!rest.empty() && rest.back() == ']') {
            const size_t open = rest.rfind('[');
            if (open != std::string::npos) {
                raw.unit = trim(rest.substr(open + 1, rest.size() - open - 2));
                rest = trim(rest.substr(0, open));
            }
        }
        raw.value = rest;
        if (block.empty()) block_line = line_no;
        block.push_back(std::move(raw));
    }
    flush_block();
    return records;
}

std::vector<CdmRecord> parse_cdm_kvn(const std::string& text, bool lenient,
                                     std::vector<std::string>* diagnostics) {
    std::istringstream in(text);
    return parse_cdm_kvn(in, lenient, diagnostics);
}

namespace {
std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

void serialize_cdm_kvn(const std::vector<CdmRecord>& records, std::ostream& out) {
    bool first = true;
    for (const CdmRecord& r : records) {
        if (!first) out << "\n";
        first = false;
        out << "EVENT_ID = " << r.event_id << "\n";
        out << "TCA = " << r.tca << "\n";
        out << "REL_POSITION_X = " << g17(r.rel_position.x) << " [m]\n";
        out << "REL_POSITION_Y = " << g17(r.rel_position.y) << " [m]\n";
        out << "REL_POSITION_Z = " << g17(r.rel_position.z) << " [m]\n";
        out << "REL_VELOCITY_X = " << g17(r.rel_velocity.x) << " [m/s]\n";
        out << "REL_VELOCITY_Y = " << g17(r.rel_velocity.y) << " [m/s]\n";
        out << "REL_VELOCITY_Z = " << g17(r.rel_velocity.z) << " [m/s]\n";
        out << "CXX = " << g17(r.pos_cov.m[0][0]) << " [m**2]\n";
        out << "CYY = " << g17(r.pos_cov.m[1][1]) << " [m**2]\n";
        out << "CZZ = " << g17(r.pos_cov.m[2][2]) << " [m**2]\n";
        out << "CXY = " << g17(r.pos_cov.m[0][1]) << " [m**2]\n";
        out << "CXZ = " << g17(r.pos_cov.m[0][2]) << " [m**2]\n";
        out << "CYZ = " << g17(r.pos_cov.m[1][2]) << " [m**2]\n";
        out << "HBR = " << g17(r.hbr) << " [m]\n";
    }
}

}  // namespace conjassess::encounter
