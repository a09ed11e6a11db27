#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "conjassess/numerics.hpp"

namespace conjassess::encounter {

using numerics::SymMat2;
using numerics::Vec2;

/// One conjunction in the encounter plane: predicted miss vector, its
/// covariance, and the combined hard-body radius. The unit of all inference.
struct ConjunctionState {
    Vec2 x;        // predicted miss vector (m)
    SymMat2 cov;   // prediction covariance (m^2)
    double hbr = 0.0;  // combined hard-body radius (m)
};

/// Throws std::invalid_argument on non-finite entries, non-PD covariance, or hbr < 0.
void validate(const ConjunctionState& state);

/// True encounter-plane miss vector; known only in simulation or synthesis.
struct TrueState {
    Vec2 xi;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
    double norm() const;
};

struct Mat3 {
    double m[3][3] = {};
};

/// Parsed conjunction-data-message fields feeding the 2-D projection.
/// All lengths in meters after ingest.
struct CdmRecord {
    std::string event_id;
    std::string tca;        // ISO-8601 timestamp
    Vec3 rel_position;      // m
    Vec3 rel_velocity;      // m/s
    Mat3 pos_cov;           // m^2, combined relative position covariance at TCA
    double hbr = 0.0;       // m
};

struct PolarMiss {
    double psi = 0.0;           // miss distance (m), >= 0
    double lambda_angle = 0.0;  // clock angle in [0, 2pi)
};

PolarMiss to_polar(Vec2 xi);
Vec2 from_polar(const PolarMiss& p);

/// Projects the 3-D relative state into the plane normal to the relative
/// velocity. Frame convention: e1 along the component of rel_position normal
/// to the velocity when that is nonzero (so x = (|x|, 0) at the prediction),
/// otherwise a deterministic axis pick; e2 = vhat x e1.
/// Throws std::runtime_error on zero relative velocity or a non-PD projection;
/// std::invalid_argument on covariance asymmetry beyond 1e-9 relative.
ConjunctionState project_to_encounter_plane(const CdmRecord& rec);

/// Parses `KEY = VALUE [unit]` blocks separated by blank lines. COMMENT lines
/// and unknown keys are ignored. In strict mode any malformed block throws
/// std::invalid_argument naming the key and line; in lenient mode bad blocks
/// are skipped and described in `diagnostics`.
std::vector<CdmRecord> parse_cdm_kvn(std::istream& in, bool lenient = false,
                                     std::vector<std::string>* diagnostics = nullptr);
std::vector<CdmRecord> parse_cdm_kvn(const std::string& text, bool lenient = false,
                                     std::vector<std::string>* diagnostics = nullptr);

void serialize_cdm_kvn(const std::vector<CdmRecord>& records, std::ostream& out);

}  // namespace conjassess::encounter
