#include "jumpkit/model_io.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>

namespace jumpkit {

namespace {

Vec3 to_vec3(const YAML::Node& n) {
  if (!n || !n.IsSequence() || n.size() != 3)
    throw std::invalid_argument("expected a 3-element list");
  return Vec3(n[0].as<double>(), n[1].as<double>(), n[2].as<double>());
}

Mat3 to_inertia(const YAML::Node& n) {
  // [Ixx, Iyy, Izz] or [Ixx, Iyy, Izz, Ixy, Ixz, Iyz]
  if (!n || !n.IsSequence() || (n.size() != 3 && n.size() != 6))
    throw std::invalid_argument("inertia must be a 3- or 6-element list");
  Mat3 I = Mat3::Zero();
  I(0, 0) = n[0].as<double>();
  I(1, 1) = n[1].as<double>();
  I(2, 2) = n[2].as<double>();
  if (n.size() == 6) {
    I(0, 1) = I(1, 0) = n[3].as<double>();
    I(0, 2) = I(2, 0) = n[4].as<double>();
    I(1, 2) = I(2, 1) = n[5].as<double>();
  }
  return I;
}

Mat3 rpy_to_rot(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

}  // namespace

KinematicTree load_model(const std::string& path) {
  YAML::Node root = YAML::LoadFile(path);
  KinematicTree t;
  if (root["lengths"]) {
    const auto& L = root["lengths"];
    t.pelvis_length = L["pelvis"].as<double>(0.0);
    t.thigh_length = L["thigh"].as<double>(0.0);
    t.calf_length = L["calf"].as<double>(0.0);
    t.foot_height = L["foot"].as<double>(0.0);
  }
  if (!root["links"]) throw std::invalid_argument(path + ": no links section");
  for (const auto& ln : root["links"]) {
    Link l;
    l.name = ln["name"].as<std::string>();
    std::string joint = ln["joint"].as<std::string>("revolute");
    if (joint == "floating") {
      l.joint.type = Joint::Type::Floating;
      l.parent = -1;
    } else {
      l.joint.type = Joint::Type::Revolute;
      l.joint.axis = to_vec3(ln["axis"]);
      std::string parent = ln["parent"].as<std::string>();
      l.parent = t.link_index(parent);
      if (l.parent < 0)
        throw std::invalid_argument(l.name + ": unknown parent " + parent);
    }
    if (ln["placement"]) l.placement_pos = to_vec3(ln["placement"]);
    if (ln["rpy"]) l.placement_rot = rpy_to_rot(to_vec3(ln["rpy"]));
    l.inertia.mass = ln["mass"].as<double>();
    if (ln["com"]) l.inertia.com_offset = to_vec3(ln["com"]);
    l.inertia.rot_inertia = to_inertia(ln["inertia"]);
    t.links.push_back(l);
  }
  for (const auto& cn : root["contacts"]) {
    ContactFrame c;
    c.name = cn["name"].as<std::string>();
    std::string link = cn["link"].as<std::string>();
    c.link = t.link_index(link);
    if (c.link < 0) throw std::invalid_argument(c.name + ": unknown link " + link);
    c.offset = to_vec3(cn["offset"]);
    t.contact_frames.push_back(c);
  }
  t.validate();
  return t;
}

void save_model(const KinematicTree& tree, const std::string& path) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "lengths" << YAML::Value << YAML::Flow << YAML::BeginMap
      << YAML::Key << "pelvis" << YAML::Value << tree.pelvis_length
      << YAML::Key << "thigh" << YAML::Value << tree.thigh_length
      << YAML::Key << "calf" << YAML::Value << tree.calf_length
      << YAML::Key << "foot" << YAML::Value << tree.foot_height << YAML::EndMap;
  out << YAML::Key << "links" << YAML::Value << YAML::BeginSeq;
  for (const auto& l : tree.links) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << l.name;
    if (l.joint.type == Joint::Type::Floating) {
      out << YAML::Key << "joint" << YAML::Value << "floating";
    } else {
      out << YAML::Key << "parent" << YAML::Value << tree.links[l.parent].name;
      out << YAML::Key << "joint" << YAML::Value << "revolute";
      out << YAML::Key << "axis" << YAML::Value << YAML::Flow << YAML::BeginSeq
          << l.joint.axis.x() << l.joint.axis.y() << l.joint.axis.z()
          << YAML::EndSeq;
    }
    out << YAML::Key << "placement" << YAML::Value << YAML::Flow
        << YAML::BeginSeq << l.placement_pos.x() << l.placement_pos.y()
        << l.placement_pos.z() << YAML::EndSeq;
    out << YAML::Key << "mass" << YAML::Value << l.inertia.mass;
    out << YAML::Key << "com" << YAML::Value << YAML::Flow << YAML::BeginSeq
        << l.inertia.com_offset.x() << l.inertia.com_offset.y()
        << l.inertia.com_offset.z() << YAML::EndSeq;
    const Mat3& I = l.inertia.rot_inertia;
    out << YAML::Key << "inertia" << YAML::Value << YAML::Flow << YAML::BeginSeq
        << I(0, 0) << I(1, 1) << I(2, 2) << I(0, 1) << I(0, 2) << I(1, 2)
        << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "contacts" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : tree.contact_frames) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.name;
    out << YAML::Key << "link" << YAML::Value << tree.links[c.link].name;
    out << YAML::Key << "offset" << YAML::Value << YAML::BeginSeq << c.offset.x()
        << c.offset.y() << c.offset.z() << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << out.c_str() << "\n";
}

}  // namespace jumpkit
