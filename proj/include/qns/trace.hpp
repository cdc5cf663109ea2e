#pragma once

// Sampled coherence records and their CSV form:
//   t_f, zeta, phi_q, phi_ext, re_coh, im_coh, n_meas
// (e-notation, 12 significant digits; n_meas column is empty when the phase
// is unresolvable).

#include "dynamics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qns {

struct TraceRecord {
    double t_f = 0.0;
    double zeta = 0.0;
    double phi_q = 0.0;
    double phi_ext = 0.0;
    cplx coherence{0.0, 0.0};
    double n_meas = std::numeric_limits<double>::quiet_NaN();
};

struct CoherenceTrace {
    std::vector<TraceRecord> records;

    static TraceRecord make_record(double tf, double zeta, double phi_q, double phi_ext) {
        TraceRecord r;
        r.t_f = tf;
        r.zeta = zeta;
        r.phi_q = phi_q;
        r.phi_ext = phi_ext;
        r.coherence = coherence_value(zeta, phi_q + phi_ext);
        const double sy = sigma_y_expectation(zeta, phi_q + phi_ext);
        if (sy != 0.0) r.n_meas = 1.0 / (sy * sy);
        return r;
    }
};

inline std::string format_sig12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

inline void write_trace_csv(std::ostream& os, const CoherenceTrace& tr) {
    os << "t_f,zeta,phi_q,phi_ext,re_coh,im_coh,n_meas\n";
    for (const auto& r : tr.records) {
        os << format_sig12(r.t_f) << ',' << format_sig12(r.zeta) << ',' << format_sig12(r.phi_q)
           << ',' << format_sig12(r.phi_ext) << ',' << format_sig12(r.coherence.real()) << ','
           << format_sig12(r.coherence.imag()) << ',';
        if (std::isfinite(r.n_meas)) os << format_sig12(r.n_meas);
        os << '\n';
    }
}

inline CoherenceTrace read_trace_csv(std::istream& is) {
    CoherenceTrace tr;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("trace csv: empty input");
    if (line.rfind("t_f,", 0) != 0) throw std::runtime_error("trace csv: bad header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 6) throw std::runtime_error("trace csv: short row");
        TraceRecord r;
        r.t_f = std::stod(cells[0]);
        r.zeta = std::stod(cells[1]);
        r.phi_q = std::stod(cells[2]);
        r.phi_ext = std::stod(cells[3]);
        r.coherence = cplx(std::stod(cells[4]), std::stod(cells[5]));
        if (cells.size() >= 7 && !cells[6].empty()) r.n_meas = std::stod(cells[6]);
        tr.records.push_back(r);
    }
    return tr;
}

inline void write_trace_csv_file(const std::string& path, const CoherenceTrace& tr) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_trace_csv(f, tr);
}

inline CoherenceTrace read_trace_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return read_trace_csv(f);
}

} // namespace qns
