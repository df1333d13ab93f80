#include "emdist/embodiment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace emdist {

void EmbodimentSpec::validate() const {
  if (links.empty()) throw std::invalid_argument(name + ": no links");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const LinkSpec& l = links[i];
    if (!(l.length > 0.0))
      throw std::invalid_argument(name + ": link length must be positive");
    if (!(l.frame_offset > 0.0) || l.frame_offset > l.length + 1e-12)
      throw std::invalid_argument(name + ": frame offset outside (0, length]");
    if (std::abs(l.joint_axis.norm() - 1.0) > 1e-9)
      throw std::invalid_argument(name + ": joint axis must be unit length");
    if (!(l.mass > 0.0))
      throw std::invalid_argument(name + ": link mass must be positive");
    if (!(l.torque_limit > 0.0))
      throw std::invalid_argument(name + ": torque limit must be positive");
  }
  for (int j : locked) {
    if (j < 1 || j > num_links())
      throw std::out_of_range(name + ": locked joint index out of range");
  }
}

EmbodimentSpec normalize(const EmbodimentSpec& spec) {
  spec.validate();
  const double total = spec.total_length();
  if (!(total > 0.0))
    throw std::invalid_argument("normalize: chain length must be positive");
  // already unit length up to rounding: return unchanged so the operation
  // is exactly idempotent
  if (std::abs(total - 1.0) <= 16.0 * spec.num_links() *
                                   std::numeric_limits<double>::epsilon()) {
    return spec;
  }
  EmbodimentSpec out = spec;
  for (auto& link : out.links) {
    link.length /= total;
    link.frame_offset /= total;
  }
  return out;
}

EmbodimentSpec lock_joints(const EmbodimentSpec& spec,
                           const std::set<int>& which) {
  for (int j : which) {
    if (j < 1 || j > spec.num_links())
      throw std::out_of_range("lock_joints: joint index out of range");
  }
  EmbodimentSpec out = spec;
  out.locked.insert(which.begin(), which.end());
  return out;
}

EmbodimentSpec planar_chain(const std::vector<double>& lengths,
                            const std::string& name) {
  EmbodimentSpec spec;
  spec.name = name;
  for (double l : lengths) {
    LinkSpec link;
    link.length = l;
    link.frame_offset = 0.5 * l;
    link.joint_axis = Eigen::Vector3d::UnitZ();
    spec.links.push_back(link);
  }
  spec.validate();
  return spec;
}

EmbodimentSpec demo_arm_7dof() {
  EmbodimentSpec spec;
  spec.name = "demo7";
  for (int i = 0; i < 7; ++i) {
    LinkSpec link;
    link.length = 1.0;
    link.frame_offset = 0.5;
    link.joint_axis =
        (i % 2 == 0) ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitY();
    spec.links.push_back(link);
  }
  return spec;
}

JointState make_joint_state(const EmbodimentSpec& spec, Eigen::VectorXd q,
                            Eigen::VectorXd qdot) {
  const int n = spec.num_links();
  if (q.size() != n || qdot.size() != n)
    throw std::invalid_argument("make_joint_state: dimension mismatch");
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(q[i]) || !std::isfinite(qdot[i]))
      throw std::invalid_argument("make_joint_state: non-finite entry");
    q[i] = wrap_angle(q[i]);
  }
  for (int j : spec.locked) {
    if (q[j - 1] != 0.0 || qdot[j - 1] != 0.0)
      throw std::invalid_argument(
          "make_joint_state: locked joint must stay at zero");
  }
  return {std::move(q), std::move(qdot)};
}

using nlohmann::json;

EmbodimentSpec spec_from_json_string(const std::string& text) {
  const json j = json::parse(text);
  EmbodimentSpec spec;
  spec.name = j.value("name", "");
  for (const auto& lj : j.at("links")) {
    LinkSpec link;
    link.length = lj.at("length").get<double>();
    link.frame_offset = lj.value("offset", 0.5 * link.length);
    if (lj.contains("axis")) {
      const auto& a = lj.at("axis");
      link.joint_axis =
          Eigen::Vector3d(a.at(0).get<double>(), a.at(1).get<double>(),
                          a.at(2).get<double>());
    }
    link.mass = lj.value("mass", 1.0);
    link.torque_limit = lj.value("torque_limit", 5.0);
    spec.links.push_back(link);
  }
  if (j.contains("locked")) {
    for (const auto& v : j.at("locked")) spec.locked.insert(v.get<int>());
  }
  spec.validate();
  return spec;
}

std::string spec_to_json_string(const EmbodimentSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["links"] = json::array();
  for (const auto& link : spec.links) {
    json lj;
    lj["length"] = link.length;
    lj["offset"] = link.frame_offset;
    lj["axis"] = {link.joint_axis.x(), link.joint_axis.y(),
                  link.joint_axis.z()};
    lj["mass"] = link.mass;
    lj["torque_limit"] = link.torque_limit;
    j["links"].push_back(lj);
  }
  j["locked"] = json::array();
  for (int l : spec.locked) j["locked"].push_back(l);
  return j.dump(2);
}

EmbodimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return spec_from_json_string(buf.str());
}

void save_spec(const EmbodimentSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write spec file: " + path);
  out << spec_to_json_string(spec) << "\n";
}

}  // namespace emdist
