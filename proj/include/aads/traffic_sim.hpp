#pragma once

#include "aads/geometry.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace aads {

enum class AgentClass : int { Car = 0, Cyclist = 1, Pedestrian = 2 };
inline constexpr std::array<AgentClass, 3> kAgentClasses{AgentClass::Car, AgentClass::Cyclist, AgentClass::Pedestrian};

double agent_radius(AgentClass c);
double agent_max_speed(AgentClass c);
std::uint16_t agent_label(AgentClass c);
const char* agent_class_name(AgentClass c);
/// Accepts "car", "cyclist", "pedestrian" and the short forms "cyc", "ped". Throws ParseError.
AgentClass parse_agent_class(const std::string& name);

struct Lane {
    std::vector<Vec2> centerline;
    double width = 3.5;
    int direction = 1; ///< +1 travels along the polyline order, -1 against it

    double length() const;
    void validate() const;
};

struct LaneProjection {
    double s = 0.0;      ///< arclength along the polyline, extrapolated past either end
    double offset = 0.0; ///< signed distance to the left of the polyline
    Vec2 closest;        ///< nearest point on the polyline
    Vec2 tangent;        ///< unit tangent at `closest` in the travel sense
};

LaneProjection project_onto_lane(const Lane& lane, const Vec2& p);
/// Point at arclength s (clamped to the polyline) shifted `offset` to the left.
Vec2 lane_point(const Lane& lane, double s, double offset = 0.0);

struct LaneMap {
    std::vector<Lane> lanes;

    void validate() const;
    /// {"lanes":[{"centerline":[[x,y],...],"width":w,"direction":1}]}; direction is optional.
    static LaneMap from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct AgentState {
    std::uint32_t id = 0;
    AgentClass cls = AgentClass::Car;
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    double heading = 0.0;
    std::size_t lane = 0;

    double radius() const { return agent_radius(cls); }
};

/// World-frame velocity samples per class.
struct VelocityBank {
    std::array<std::vector<Vec2>, 3> samples;

    std::vector<Vec2>& of(AgentClass c) { return samples[static_cast<std::size_t>(c)]; }
    const std::vector<Vec2>& of(AgentClass c) const { return samples[static_cast<std::size_t>(c)]; }
};

struct TrafficConfig {
    double dt = 0.1;
    std::size_t candidate_count = 64;
    double w_cont = 1.0;
    double w_coll = 10.0;
    double w_attr = 0.5;
    double w_dir = 2.0;
    double safe_gap = 0.5;
    double ttc_horizon = 3.0;
    double neighbor_radius = 20.0;
    /// Agents leaving the end of their lane re-enter at its start.
    bool lane_wrap = true;
    std::uint64_t seed = 0;

    void validate() const;
    static TrafficConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Trajectory logs -----------------------------------------------------------

struct TrajectoryRow {
    std::int64_t frame = 0;
    std::uint32_t agent = 0;
    AgentClass cls = AgentClass::Car;
    Vec2 position = Vec2::Zero();
    double heading = 0.0;
    Vec2 velocity = Vec2::Zero();
};

struct TrajectoryLog {
    double dt = 0.1;
    std::vector<TrajectoryRow> rows;
};

/// CSV with header frame_id,agent_id,class,x,y,heading,vx,vy. Throws ParseError naming the line.
TrajectoryLog parse_trajectory_csv(const std::string& text, double dt = 0.1);
std::string format_trajectory_csv(const TrajectoryLog& log);
/// Reads the CSV and, when present, the sidecar `<stem>.json` holding {"dt": ...}.
TrajectoryLog read_trajectory(const std::filesystem::path& csv);
void write_trajectory(const std::filesystem::path& csv, const TrajectoryLog& log);

/// Finite differences of consecutive frames per agent, bucketed by class. Agents seen once
/// contribute nothing.
VelocityBank load_velocity_bank(const TrajectoryLog& log);

// Simulation ------------------------------------------------------------------

/// Places agents in lane slots spaced by the largest requested diameter plus safe_gap, in a
/// seeded order, with a small seeded lateral offset. Initial velocity is the speed of a seeded
/// bank sample along the lane tangent, or zero without a bank. Throws std::invalid_argument
/// naming the achievable count when the lanes cannot hold the request.
std::vector<AgentState> init_agents(const LaneMap& lanes, const std::map<AgentClass, std::size_t>& counts,
                                    const TrafficConfig& cfg, const VelocityBank* bank = nullptr);

/// Constant-velocity time until discs at p and q, moving with v and w, come within `gap` of
/// touching; `radii` is the sum of both radii. 0 if they already are, +inf if never.
double time_to_collision(const Vec2& p, const Vec2& v, double radii, const Vec2& q, const Vec2& w, double gap);

/// Continuity + collision + centre-line attraction + direction energy of moving `agent` with
/// velocity `v`. Neighbours farther than neighbor_radius and the agent itself are ignored; a
/// zero velocity has no direction cost.
double agent_energy(const AgentState& agent, const Vec2& v, std::span<const AgentState> neighbors, const Lane& lane,
                    const TrafficConfig& cfg);

/// Position after moving with `v` for one step, wrapped to the lane start when enabled.
Vec2 advance_position(const AgentState& agent, const Vec2& v, const Lane& lane, const TrafficConfig& cfg);

/// Candidate velocities for `agent` at `tick`: candidate_count seeded bank draws followed by zero.
std::vector<Vec2> draw_candidates(const AgentState& agent, const VelocityBank& bank, const TrafficConfig& cfg,
                                  std::uint64_t tick);

/// One step in id order. Each agent takes the lowest-energy candidate (first on ties) among
/// those within its class speed limit that keep a gap of at least safe_gap to every other
/// agent's current position; stopping is always admissible. Throws std::invalid_argument when
/// a present class has an empty bank.
std::vector<AgentState> step(std::span<const AgentState> agents, const VelocityBank& bank, const LaneMap& lanes,
                             const TrafficConfig& cfg, std::uint64_t tick);

/// Runs `steps` steps and logs every frame including the initial one.
TrajectoryLog simulate_traffic(std::vector<AgentState> agents, const VelocityBank& bank, const LaneMap& lanes,
                               const TrafficConfig& cfg, std::size_t steps);

// Evaluation -------------------------------------------------------------------

/// Probability histogram over [0, max] with `bins` equal intervals; values at max fall in the
/// last bin. A zero max puts everything in the first bin. Empty input yields all zeros.
std::vector<double> histogram(std::span<const double> values, std::size_t bins, double max);
double l1_distance(std::span<const double> a, std::span<const double> b);

struct Distributions {
    std::vector<double> speed;
    double speed_max = 0.0;
    std::vector<double> min_distance; ///< empty when no frame has two agents
    double distance_max = 0.0;
    std::vector<std::string> warnings;
};

/// Per-frame per-agent speeds and nearest-neighbour centre distances. A non-positive max
/// means the sample maximum. Throws std::invalid_argument for an empty log or bins == 0.
Distributions eval_distributions(const TrajectoryLog& log, std::size_t bins = 30, double speed_max = 0.0,
                                 double distance_max = 0.0);
std::vector<double> speed_samples(const TrajectoryLog& log);
std::vector<double> speed_samples(const VelocityBank& bank);

} // namespace aads
