#include "lanegraph/record.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace lanegraph {

using nlohmann::json;

namespace {

json point_to_json(const Point2& p) { return json::array({p.x, p.y}); }

Point2 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::runtime_error("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json pts_to_json(const std::vector<Point2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(point_to_json(p));
  return a;
}

std::vector<Point2> pts_from_json(const json& j) {
  std::vector<Point2> out;
  for (const auto& e : j) out.push_back(point_from_json(e));
  return out;
}

}  // namespace

namespace io {

std::string record_to_json(const MinimapRecord& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["tile"] = {{"q", r.tile.q}, {"r", r.tile.r}};
  j["odd"] = r.odd;
  j["scenario"] = r.scenario;
  j["stage"] = r.stage;
  j["seed"] = r.seed;
  json polys = json::array();
  for (const auto& p : r.polylines) {
    json jp;
    jp["kind"] = p.kind == PolylineKind::Trace ? "trace" : "boundary";
    jp["drive"] = p.drive;
    jp["pts"] = pts_to_json(p.pts);
    polys.push_back(jp);
  }
  j["polylines"] = polys;
  json centers = json::array();
  for (const auto& c : r.centers)
    centers.push_back({{"pos", point_to_json(c.pos)}, {"dir", point_to_json(c.dir)}});
  j["centers"] = centers;
  json pairs = json::array();
  for (const auto& p : r.gt_pairs)
    pairs.push_back({{"center", point_to_json(p.center)},
                     {"left", point_to_json(p.left)},
                     {"right", point_to_json(p.right)},
                     {"matched", p.matched}});
  j["gt_pairs"] = pairs;
  json edges = json::array();
  for (const auto& [a, b] : r.gt_edges) edges.push_back(json::array({a, b}));
  j["gt_edges"] = edges;
  json lanes = json::array();
  for (const auto& l : r.gt.lanes)
    lanes.push_back({{"center", pts_to_json(l.center.pts)}, {"width", l.width}});
  json conns = json::array();
  for (const auto& c : r.gt.connections)
    conns.push_back({{"from_lane", c.from_lane},
                     {"s_from", c.s_from},
                     {"to_lane", c.to_lane},
                     {"s_to", c.s_to}});
  json gt_bounds = json::array();
  for (const auto& b : r.gt.boundaries) gt_bounds.push_back(pts_to_json(b.pts));
  json drives = json::array();
  for (const auto& t : r.gt.drive_transforms)
    drives.push_back({{"theta", t.theta}, {"tx", t.tx}, {"ty", t.ty}});
  j["gt"] = {{"lanes", lanes},
             {"connections", conns},
             {"boundaries", gt_bounds},
             {"drive_transforms", drives}};
  return j.dump();
}

MinimapRecord record_from_json(const std::string& text) {
  json j = json::parse(text);
  if (!j.contains("schema_version"))
    throw std::runtime_error("missing schema_version");
  int version = j["schema_version"].get<int>();
  if (version != kSchemaVersion)
    throw std::runtime_error("schema_version " + std::to_string(version) +
                             " not supported, this build reads version " +
                             std::to_string(kSchemaVersion));
  MinimapRecord r;
  r.schema_version = version;
  r.tile = {j.at("tile").at("q").get<int>(), j.at("tile").at("r").get<int>()};
  r.odd = j.at("odd").get<std::string>();
  r.scenario = j.at("scenario").get<std::string>();
  r.stage = j.at("stage").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  for (const auto& jp : j.at("polylines")) {
    Polyline p;
    std::string kind = jp.at("kind").get<std::string>();
    if (kind == "trace")
      p.kind = PolylineKind::Trace;
    else if (kind == "boundary")
      p.kind = PolylineKind::Boundary;
    else
      throw std::runtime_error("unknown polyline kind '" + kind + "'");
    p.drive = jp.value("drive", -1);
    p.pts = pts_from_json(jp.at("pts"));
    if (p.pts.size() < 2) throw std::runtime_error("polyline with fewer than 2 points");
    r.polylines.push_back(std::move(p));
  }
  for (const auto& jc : j.at("centers"))
    r.centers.push_back(
        {point_from_json(jc.at("pos")), point_from_json(jc.at("dir"))});
  for (const auto& jp : j.at("gt_pairs")) {
    LanePair p;
    p.center = point_from_json(jp.at("center"));
    p.left = point_from_json(jp.at("left"));
    p.right = point_from_json(jp.at("right"));
    p.matched = jp.at("matched").get<bool>();
    r.gt_pairs.push_back(p);
  }
  if (r.gt_pairs.size() != r.centers.size())
    throw std::runtime_error("gt_pairs and centers must be aligned");
  int n = static_cast<int>(r.centers.size());
  for (const auto& je : j.at("gt_edges")) {
    int a = je.at(0).get<int>(), b = je.at(1).get<int>();
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw std::runtime_error("gt_edges index out of range");
    r.gt_edges.push_back({a, b});
  }
  const auto& jg = j.at("gt");
  for (const auto& jl : jg.at("lanes")) {
    GtLane l;
    l.center.pts = pts_from_json(jl.at("center"));
    l.width = jl.at("width").get<double>();
    r.gt.lanes.push_back(std::move(l));
  }
  for (const auto& jc : jg.at("connections"))
    r.gt.connections.push_back({jc.at("from_lane").get<int>(), jc.at("s_from").get<double>(),
                                jc.at("to_lane").get<int>(), jc.at("s_to").get<double>()});
  for (const auto& jb : jg.at("boundaries")) {
    Polyline b;
    b.kind = PolylineKind::Boundary;
    b.pts = pts_from_json(jb);
    r.gt.boundaries.push_back(std::move(b));
  }
  for (const auto& jt : jg.at("drive_transforms"))
    r.gt.drive_transforms.push_back({jt.at("theta").get<double>(), jt.at("tx").get<double>(),
                                     jt.at("ty").get<double>()});
  return r;
}

void save_records(const std::string& path, const std::vector<MinimapRecord>& recs) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& r : recs) f << record_to_json(r) << "\n";
  if (!f) throw std::runtime_error("write failed for " + path);
}

std::vector<MinimapRecord> load_records(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<MinimapRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace io

std::vector<uint8_t> edges_to_adjacency(const std::vector<std::pair<int, int>>& edges, int n) {
  std::vector<uint8_t> adj(static_cast<size_t>(n) * n, 0);
  for (const auto& [a, b] : edges) adj[static_cast<size_t>(a) * n + b] = 1;
  return adj;
}

}  // namespace lanegraph
