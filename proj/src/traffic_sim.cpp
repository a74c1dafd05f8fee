#include "aads/traffic_sim.hpp"

#include "aads/config_util.hpp"
#include "aads/errors.hpp"
#include "aads/io.hpp"
#include "aads/rng.hpp"
#include "aads/scene_types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace aads {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep))
        out.push_back(cur);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, std::size_t line, const char* name)
{
    const std::string t = trim(field);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != t.size() || !std::isfinite(v))
        throw ParseError("trajectory CSV line " + std::to_string(line) + ": bad " + name + " \"" + t + "\"");
    return v;
}

std::int64_t parse_int(const std::string& field, std::size_t line, const char* name)
{
    const double v = parse_double(field, line, name);
    if (v != std::floor(v) || std::abs(v) > 9e15)
        throw ParseError("trajectory CSV line " + std::to_string(line) + ": " + name + " is not an integer");
    return static_cast<std::int64_t>(v);
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool keeps_gap(const AgentState& a, const Vec2& p, std::span<const AgentState> others, double gap)
{
    for (const AgentState& o : others) {
        if (o.id == a.id)
            continue;
        if ((p - o.position).norm() - a.radius() - o.radius() < gap)
            return false;
    }
    return true;
}

} // namespace

double agent_radius(AgentClass c)
{
    switch (c) {
    case AgentClass::Car: return 1.0;
    case AgentClass::Cyclist: return 0.5;
    case AgentClass::Pedestrian: return 0.3;
    }
    return 1.0;
}

double agent_max_speed(AgentClass c)
{
    switch (c) {
    case AgentClass::Car: return 30.0;
    case AgentClass::Cyclist: return 10.0;
    case AgentClass::Pedestrian: return 3.0;
    }
    return 30.0;
}

std::uint16_t agent_label(AgentClass c)
{
    switch (c) {
    case AgentClass::Car: return label::kCar;
    case AgentClass::Cyclist: return label::kCyclist;
    case AgentClass::Pedestrian: return label::kPedestrian;
    }
    return label::kUnknown;
}

const char* agent_class_name(AgentClass c)
{
    switch (c) {
    case AgentClass::Car: return "car";
    case AgentClass::Cyclist: return "cyclist";
    case AgentClass::Pedestrian: return "pedestrian";
    }
    return "car";
}

AgentClass parse_agent_class(const std::string& name)
{
    if (name == "car")
        return AgentClass::Car;
    if (name == "cyclist" || name == "cyc")
        return AgentClass::Cyclist;
    if (name == "pedestrian" || name == "ped")
        return AgentClass::Pedestrian;
    throw ParseError("unknown agent class \"" + name + "\"");
}

// Lanes -------------------------------------------------------------------------

double Lane::length() const
{
    double len = 0.0;
    for (std::size_t i = 1; i < centerline.size(); ++i)
        len += (centerline[i] - centerline[i - 1]).norm();
    return len;
}

void Lane::validate() const
{
    if (centerline.size() < 2)
        throw std::invalid_argument("Lane: centerline needs at least 2 points");
    for (const Vec2& p : centerline)
        if (!p.allFinite())
            throw std::invalid_argument("Lane: non-finite centerline point");
    for (std::size_t i = 1; i < centerline.size(); ++i)
        if ((centerline[i] - centerline[i - 1]).norm() == 0.0)
            throw std::invalid_argument("Lane: repeated centerline point");
    if (!(width > 0.0))
        throw std::invalid_argument("Lane: width must be positive");
    if (direction != 1 && direction != -1)
        throw std::invalid_argument("Lane: direction must be +1 or -1");
}

LaneProjection project_onto_lane(const Lane& lane, const Vec2& p)
{
    const std::size_t nseg = lane.centerline.size() - 1;
    LaneProjection best;
    double best_d = kInf;
    double s0 = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) {
        const Vec2 a = lane.centerline[i];
        const Vec2 ab = lane.centerline[i + 1] - a;
        const double len = ab.norm();
        const double t_raw = (p - a).dot(ab) / (len * len);
        const double t = std::clamp(t_raw, 0.0, 1.0);
        const Vec2 c = a + t * ab;
        const double d = (p - c).norm();
        if (d < best_d) {
            best_d = d;
            const Vec2 dir = ab / len;
            double t_ext = t;
            if ((i == 0 && t_raw < 0.0) || (i + 1 == nseg && t_raw > 1.0))
                t_ext = t_raw;
            best.s = s0 + t_ext * len;
            best.closest = c;
            best.offset = dir.x() * (p - a).y() - dir.y() * (p - a).x();
            best.tangent = dir * static_cast<double>(lane.direction);
        }
        s0 += len;
    }
    return best;
}

Vec2 lane_point(const Lane& lane, double s, double offset)
{
    s = std::clamp(s, 0.0, lane.length());
    double s0 = 0.0;
    const std::size_t nseg = lane.centerline.size() - 1;
    for (std::size_t i = 0; i < nseg; ++i) {
        const Vec2 a = lane.centerline[i];
        const Vec2 ab = lane.centerline[i + 1] - a;
        const double len = ab.norm();
        if (s <= s0 + len || i + 1 == nseg) {
            const Vec2 dir = ab / len;
            return a + (s - s0) * dir + offset * Vec2(-dir.y(), dir.x());
        }
        s0 += len;
    }
    return lane.centerline.back();
}

void LaneMap::validate() const
{
    if (lanes.empty())
        throw std::invalid_argument("LaneMap: no lanes");
    for (const Lane& l : lanes)
        l.validate();
}

LaneMap LaneMap::from_json(const nlohmann::json& j)
{
    const std::string where = "lane map";
    config::check_keys(j, {"lanes"}, where);
    if (!j.contains("lanes") || !j.at("lanes").is_array())
        throw ParseError(where + ": \"lanes\" must be an array");
    LaneMap map;
    for (const auto& jl : j.at("lanes")) {
        config::check_keys(jl, {"centerline", "width", "direction"}, where + " lane");
        Lane lane;
        if (!jl.contains("centerline") || !jl.at("centerline").is_array())
            throw ParseError(where + ": lane without a centerline array");
        for (const auto& pt : jl.at("centerline")) {
            if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
                throw ParseError(where + ": centerline points must be [x, y]");
            lane.centerline.emplace_back(pt[0].get<double>(), pt[1].get<double>());
        }
        config::read_opt(jl, "width", lane.width, where);
        if (jl.contains("direction")) {
            const auto& d = jl.at("direction");
            if (d.is_string())
                lane.direction = d == "backward" ? -1 : d == "forward" ? 1 : 0;
            else if (d.is_number_integer())
                lane.direction = d.get<int>();
            else
                lane.direction = 0;
        }
        map.lanes.push_back(std::move(lane));
    }
    try {
        map.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    return map;
}

nlohmann::json LaneMap::to_json() const
{
    nlohmann::json lanes_j = nlohmann::json::array();
    for (const Lane& l : lanes) {
        nlohmann::json pts = nlohmann::json::array();
        for (const Vec2& p : l.centerline)
            pts.push_back({p.x(), p.y()});
        lanes_j.push_back({{"centerline", pts}, {"width", l.width}, {"direction", l.direction}});
    }
    return {{"lanes", lanes_j}};
}

// Config --------------------------------------------------------------------------

void TrafficConfig::validate() const
{
    if (!(dt > 0.0))
        throw std::invalid_argument("TrafficConfig: dt must be positive");
    if (candidate_count == 0)
        throw std::invalid_argument("TrafficConfig: candidate_count must be positive");
    if (!(w_cont >= 0.0 && w_coll >= 0.0 && w_attr >= 0.0 && w_dir >= 0.0))
        throw std::invalid_argument("TrafficConfig: weights must be >= 0");
    if (!(safe_gap >= 0.0))
        throw std::invalid_argument("TrafficConfig: safe_gap must be >= 0");
    if (!(ttc_horizon > 0.0) || !(neighbor_radius > 0.0))
        throw std::invalid_argument("TrafficConfig: ttc_horizon and neighbor_radius must be positive");
}

TrafficConfig TrafficConfig::from_json(const nlohmann::json& j)
{
    const std::string where = "traffic config";
    config::check_keys(j, {"dt", "candidate_count", "w_cont", "w_coll", "w_attr", "w_dir", "safe_gap", "ttc_horizon",
                           "neighbor_radius", "lane_wrap", "seed"},
                       where);
    TrafficConfig c;
    config::read_opt(j, "dt", c.dt, where);
    config::read_opt(j, "candidate_count", c.candidate_count, where);
    config::read_opt(j, "w_cont", c.w_cont, where);
    config::read_opt(j, "w_coll", c.w_coll, where);
    config::read_opt(j, "w_attr", c.w_attr, where);
    config::read_opt(j, "w_dir", c.w_dir, where);
    config::read_opt(j, "safe_gap", c.safe_gap, where);
    config::read_opt(j, "ttc_horizon", c.ttc_horizon, where);
    config::read_opt(j, "neighbor_radius", c.neighbor_radius, where);
    config::read_opt(j, "lane_wrap", c.lane_wrap, where);
    config::read_opt(j, "seed", c.seed, where);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    return c;
}

nlohmann::json TrafficConfig::to_json() const
{
    return {{"dt", dt},           {"candidate_count", candidate_count},
            {"w_cont", w_cont},   {"w_coll", w_coll},
            {"w_attr", w_attr},   {"w_dir", w_dir},
            {"safe_gap", safe_gap}, {"ttc_horizon", ttc_horizon},
            {"neighbor_radius", neighbor_radius}, {"lane_wrap", lane_wrap},
            {"seed", seed}};
}

// Trajectory logs -------------------------------------------------------------------

TrajectoryLog parse_trajectory_csv(const std::string& text, double dt)
{
    if (!(dt > 0.0))
        throw ParseError("trajectory CSV: dt must be positive");
    TrajectoryLog log;
    log.dt = dt;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        if (!header) {
            std::string h;
            for (char ch : line)
                if (ch != ' ' && ch != '\r')
                    h += ch;
            if (h != "frame_id,agent_id,class,x,y,heading,vx,vy")
                throw ParseError("trajectory CSV line " + std::to_string(lineno) + ": unexpected header");
            header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 8)
            throw ParseError("trajectory CSV line " + std::to_string(lineno) + ": expected 8 fields, got " +
                             std::to_string(f.size()));
        TrajectoryRow r;
        r.frame = parse_int(f[0], lineno, "frame_id");
        const std::int64_t id = parse_int(f[1], lineno, "agent_id");
        if (id < 0 || id > std::numeric_limits<std::uint32_t>::max())
            throw ParseError("trajectory CSV line " + std::to_string(lineno) + ": agent_id out of range");
        r.agent = static_cast<std::uint32_t>(id);
        try {
            r.cls = parse_agent_class(trim(f[2]));
        } catch (const ParseError& e) {
            throw ParseError("trajectory CSV line " + std::to_string(lineno) + ": " + e.what());
        }
        r.position = Vec2(parse_double(f[3], lineno, "x"), parse_double(f[4], lineno, "y"));
        r.heading = parse_double(f[5], lineno, "heading");
        r.velocity = Vec2(parse_double(f[6], lineno, "vx"), parse_double(f[7], lineno, "vy"));
        log.rows.push_back(r);
    }
    if (!header)
        throw ParseError("trajectory CSV: missing header");
    return log;
}

std::string format_trajectory_csv(const TrajectoryLog& log)
{
    std::string out = "frame_id,agent_id,class,x,y,heading,vx,vy\n";
    for (const TrajectoryRow& r : log.rows) {
        out += std::to_string(r.frame) + ',' + std::to_string(r.agent) + ',' + agent_class_name(r.cls) + ',' +
               fmt(r.position.x()) + ',' + fmt(r.position.y()) + ',' + fmt(r.heading) + ',' + fmt(r.velocity.x()) +
               ',' + fmt(r.velocity.y()) + '\n';
    }
    return out;
}

TrajectoryLog read_trajectory(const std::filesystem::path& csv)
{
    double dt = 0.1;
    std::filesystem::path side = csv;
    side.replace_extension(".json");
    if (std::filesystem::exists(side)) {
        const auto j = io::read_json(side);
        config::check_keys(j, {"dt"}, side.string());
        config::read_opt(j, "dt", dt, side.string());
    }
    const auto bytes = io::read_bytes(csv);
    return parse_trajectory_csv(std::string(bytes.begin(), bytes.end()), dt);
}

void write_trajectory(const std::filesystem::path& csv, const TrajectoryLog& log)
{
    const std::string text = format_trajectory_csv(log);
    io::write_bytes(csv, std::vector<std::uint8_t>(text.begin(), text.end()));
    std::filesystem::path side = csv;
    side.replace_extension(".json");
    io::write_json(side, nlohmann::json{{"dt", log.dt}});
}

VelocityBank load_velocity_bank(const TrajectoryLog& log)
{
    std::map<std::uint32_t, std::vector<const TrajectoryRow*>> by_agent;
    for (const TrajectoryRow& r : log.rows)
        by_agent[r.agent].push_back(&r);
    VelocityBank bank;
    for (auto& [id, rows] : by_agent) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const TrajectoryRow* a, const TrajectoryRow* b) { return a->frame < b->frame; });
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto df = rows[i]->frame - rows[i - 1]->frame;
            if (df <= 0)
                throw ParseError("trajectory: agent " + std::to_string(id) + " has a repeated frame " +
                                 std::to_string(rows[i]->frame));
            const double t = static_cast<double>(df) * log.dt;
            bank.of(rows[0]->cls).push_back((rows[i]->position - rows[i - 1]->position) / t);
        }
    }
    return bank;
}

// Simulation --------------------------------------------------------------------------

std::vector<AgentState> init_agents(const LaneMap& lanes, const std::map<AgentClass, std::size_t>& counts,
                                    const TrafficConfig& cfg, const VelocityBank* bank)
{
    lanes.validate();
    cfg.validate();
    std::size_t requested = 0;
    double spacing = 0.0;
    for (const auto& [cls, n] : counts) {
        requested += n;
        if (n > 0)
            spacing = std::max(spacing, 2.0 * agent_radius(cls) + cfg.safe_gap);
    }
    if (requested == 0)
        return {};

    struct Slot {
        std::size_t lane;
        double s;
        std::uint64_t key;
    };
    double total = 0.0;
    for (const Lane& l : lanes.lanes)
        total += l.length();
    auto capacity = [&](double sp) {
        std::size_t n = 0;
        for (const Lane& l : lanes.lanes)
            n += static_cast<std::size_t>(std::floor(l.length() / sp + 1e-9));
        return n;
    };
    if (capacity(spacing) < requested)
        throw std::invalid_argument("init_agents: requested " + std::to_string(requested) +
                                    " agents but the lanes hold at most " + std::to_string(capacity(spacing)));
    // Spread agents over the available length; shrink towards the minimum spacing only as needed.
    double pitch = std::max(spacing, total / static_cast<double>(requested));
    while (pitch > spacing && capacity(pitch) < requested)
        pitch = std::max(spacing, pitch * 0.95);
    std::vector<Slot> slots;
    for (std::size_t li = 0; li < lanes.lanes.size(); ++li) {
        const double len = lanes.lanes[li].length();
        const auto n = static_cast<std::size_t>(std::floor(len / pitch + 1e-9));
        const double step_s = n ? len / static_cast<double>(n) : 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double jitter = (step_s - spacing) * (rng::uniform({cfg.seed, 0x5108ull, li, k}) - 0.5);
            slots.push_back({li, (static_cast<double>(k) + 0.5) * step_s + jitter,
                             rng::hash({cfg.seed, 0x5107ull, li, k})});
        }
    }
    std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.key < b.key; });

    std::vector<AgentState> agents;
    std::size_t next_slot = 0;
    std::uint32_t id = 0;
    for (AgentClass cls : kAgentClasses) {
        const auto it = counts.find(cls);
        const std::size_t n = it == counts.end() ? 0 : it->second;
        for (std::size_t k = 0; k < n; ++k, ++id) {
            AgentState a;
            a.id = id;
            a.cls = cls;
            bool placed = false;
            while (!placed && next_slot < slots.size()) {
                const Slot& slot = slots[next_slot++];
                const Lane& lane = lanes.lanes[slot.lane];
                const double room = std::max(0.0, std::min(0.25, lane.width / 2.0 - a.radius()));
                const double offset = room * (2.0 * rng::uniform({cfg.seed, 0x0FF5ull, id}) - 1.0);
                const Vec2 p = lane_point(lane, slot.s, offset);
                if (!keeps_gap(a, p, agents, cfg.safe_gap))
                    continue;
                const Vec2 t = project_onto_lane(lane, p).tangent;
                a.position = p;
                a.lane = slot.lane;
                a.heading = std::atan2(t.y(), t.x());
                if (bank && !bank->of(cls).empty()) {
                    const auto& bs = bank->of(cls);
                    const auto idx = static_cast<std::size_t>(rng::uniform({cfg.seed, 0x1417ull, id}) *
                                                              static_cast<double>(bs.size()));
                    a.velocity = std::min(bs[idx].norm(), agent_max_speed(cls)) * t;
                }
                placed = true;
            }
            if (!placed)
                throw std::invalid_argument("init_agents: requested " + std::to_string(requested) +
                                            " agents but only " + std::to_string(agents.size()) +
                                            " fit without overlap");
            agents.push_back(a);
        }
    }
    return agents;
}

double time_to_collision(const Vec2& p, const Vec2& v, double r, const Vec2& q, const Vec2& w, double s)
{
    const Vec2 d = q - p;
    const Vec2 u = w - v;
    const double reach = r + s;
    const double c = d.squaredNorm() - reach * reach;
    if (c <= 0.0)
        return 0.0;
    const double a = u.squaredNorm();
    const double b = 2.0 * d.dot(u);
    if (a == 0.0 || b >= 0.0)
        return kInf;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0)
        return kInf;
    return (-b - std::sqrt(disc)) / (2.0 * a);
}

double agent_energy(const AgentState& agent, const Vec2& v, std::span<const AgentState> neighbors, const Lane& lane,
                    const TrafficConfig& cfg)
{
    const double e_cont = (v - agent.velocity).squaredNorm();
    double e_coll = 0.0;
    for (const AgentState& n : neighbors) {
        if (n.id == agent.id || (n.position - agent.position).norm() > cfg.neighbor_radius)
            continue;
        const double ttc = time_to_collision(agent.position, v, agent.radius() + n.radius(), n.position, n.velocity,
                                             cfg.safe_gap);
        const double x = std::max(0.0, 1.0 - ttc / cfg.ttc_horizon);
        e_coll += x * x;
    }
    const Vec2 next = agent.position + v * cfg.dt;
    const double e_attr = (next - project_onto_lane(lane, next).closest).squaredNorm();
    double e_dir = 0.0;
    const double speed = v.norm();
    if (speed > 0.0)
        e_dir = 1.0 - v.dot(project_onto_lane(lane, agent.position).tangent) / speed;
    return cfg.w_cont * e_cont + cfg.w_coll * e_coll + cfg.w_attr * e_attr + cfg.w_dir * e_dir;
}

Vec2 advance_position(const AgentState& agent, const Vec2& v, const Lane& lane, const TrafficConfig& cfg)
{
    const Vec2 next = agent.position + v * cfg.dt;
    if (!cfg.lane_wrap)
        return next;
    const LaneProjection pr = project_onto_lane(lane, next);
    const double len = lane.length();
    if (lane.direction > 0 && pr.s > len)
        return lane_point(lane, pr.s - len, pr.offset);
    if (lane.direction < 0 && pr.s < 0.0)
        return lane_point(lane, pr.s + len, pr.offset);
    return next;
}

std::vector<Vec2> draw_candidates(const AgentState& agent, const VelocityBank& bank, const TrafficConfig& cfg,
                                  std::uint64_t tick)
{
    const auto& samples = bank.of(agent.cls);
    if (samples.empty())
        throw std::invalid_argument(std::string("traffic: empty velocity bank for class ") +
                                    agent_class_name(agent.cls));
    std::vector<Vec2> out;
    out.reserve(cfg.candidate_count + 1);
    for (std::size_t k = 0; k < cfg.candidate_count; ++k) {
        const auto idx = std::min(samples.size() - 1,
                                  static_cast<std::size_t>(rng::uniform({cfg.seed, tick, agent.id, k}) *
                                                           static_cast<double>(samples.size())));
        out.push_back(samples[idx]);
    }
    out.push_back(Vec2::Zero());
    return out;
}

std::vector<AgentState> step(std::span<const AgentState> agents, const VelocityBank& bank, const LaneMap& lanes,
                             const TrafficConfig& cfg, std::uint64_t tick)
{
    cfg.validate();
    std::vector<AgentState> next(agents.begin(), agents.end());
    std::vector<std::size_t> order(next.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return next[a].id < next[b].id; });
    for (std::size_t i : order) {
        AgentState& a = next[i];
        if (a.lane >= lanes.lanes.size())
            throw std::invalid_argument("traffic: agent " + std::to_string(a.id) + " has an unknown lane");
        const Lane& lane = lanes.lanes[a.lane];
        const auto cands = draw_candidates(a, bank, cfg, tick);
        double best_e = kInf;
        std::size_t best = cands.size() - 1;
        Vec2 best_pos = a.position;
        for (std::size_t k = 0; k < cands.size(); ++k) {
            const Vec2& v = cands[k];
            const bool stop = v.isZero();
            if (!stop && v.norm() > agent_max_speed(a.cls))
                continue;
            const Vec2 p = advance_position(a, v, lane, cfg);
            if (!stop && !keeps_gap(a, p, next, cfg.safe_gap))
                continue;
            const double e = agent_energy(a, v, next, lane, cfg);
            if (e < best_e) {
                best_e = e;
                best = k;
                best_pos = p;
            }
        }
        a.velocity = cands[best];
        a.position = best_pos;
        if (a.velocity.norm() > 0.1)
            a.heading = std::atan2(a.velocity.y(), a.velocity.x());
    }
    return next;
}

TrajectoryLog simulate_traffic(std::vector<AgentState> agents, const VelocityBank& bank, const LaneMap& lanes,
                               const TrafficConfig& cfg, std::size_t steps)
{
    TrajectoryLog log;
    log.dt = cfg.dt;
    auto record = [&](std::int64_t frame) {
        for (const AgentState& a : agents)
            log.rows.push_back({frame, a.id, a.cls, a.position, a.heading, a.velocity});
    };
    record(0);
    for (std::size_t t = 1; t <= steps; ++t) {
        agents = step(agents, bank, lanes, cfg, t);
        record(static_cast<std::int64_t>(t));
    }
    return log;
}

// Evaluation ---------------------------------------------------------------------------

std::vector<double> histogram(std::span<const double> values, std::size_t bins, double max)
{
    if (bins == 0)
        throw std::invalid_argument("histogram: bins must be positive");
    std::vector<double> h(bins, 0.0);
    if (values.empty())
        return h;
    std::vector<std::size_t> count(bins, 0);
    for (double v : values) {
        std::size_t b = 0;
        if (max > 0.0)
            b = static_cast<std::size_t>(std::clamp(std::floor(v / max * static_cast<double>(bins)), 0.0,
                                                    static_cast<double>(bins - 1)));
        ++count[b];
    }
    for (std::size_t b = 0; b < bins; ++b)
        h[b] = static_cast<double>(count[b]) / static_cast<double>(values.size());
    return h;
}

double l1_distance(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("l1_distance: histograms differ in length");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += std::abs(a[i] - b[i]);
    return d;
}

std::vector<double> speed_samples(const TrajectoryLog& log)
{
    std::vector<double> s;
    s.reserve(log.rows.size());
    for (const TrajectoryRow& r : log.rows)
        s.push_back(r.velocity.norm());
    return s;
}

std::vector<double> speed_samples(const VelocityBank& bank)
{
    std::vector<double> s;
    for (const auto& cls : bank.samples)
        for (const Vec2& v : cls)
            s.push_back(v.norm());
    return s;
}

Distributions eval_distributions(const TrajectoryLog& log, std::size_t bins, double speed_max, double distance_max)
{
    if (log.rows.empty())
        throw std::invalid_argument("eval_distributions: no samples");
    if (bins == 0)
        throw std::invalid_argument("eval_distributions: bins must be positive");
    Distributions out;
    const auto speeds = speed_samples(log);
    out.speed_max = speed_max > 0.0 ? speed_max : *std::max_element(speeds.begin(), speeds.end());
    out.speed = histogram(speeds, bins, out.speed_max);

    std::map<std::int64_t, std::vector<const TrajectoryRow*>> frames;
    for (const TrajectoryRow& r : log.rows)
        frames[r.frame].push_back(&r);
    std::vector<double> nearest;
    for (const auto& [f, rows] : frames) {
        if (rows.size() < 2)
            continue;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double best = kInf;
            for (std::size_t j = 0; j < rows.size(); ++j)
                if (j != i)
                    best = std::min(best, (rows[i]->position - rows[j]->position).norm());
            nearest.push_back(best);
        }
    }
    if (nearest.empty()) {
        out.warnings.push_back("no frame has two agents; min-distance histogram is empty");
        return out;
    }
    out.distance_max = distance_max > 0.0 ? distance_max : *std::max_element(nearest.begin(), nearest.end());
    out.min_distance = histogram(nearest, bins, out.distance_max);
    return out;
}

} // namespace aads
