#include "pgo/init_analyzer.hpp"

#include <map>

#include "pgo/error.hpp"

namespace pgo {

namespace {

struct Builder {
  std::int64_t self = 0;
  std::map<std::string, Builder> children;  // keyed by last component
};

InitNode finish(const std::string& name, const Builder& b) {
  InitNode n;
  n.name = name;
  n.self_time_us = b.self;
  n.cumulative_time_us = b.self;
  for (const auto& [part, child] : b.children) {
    const std::string child_name = name == kInitRoot ? part : name + "." + part;
    n.children.push_back(finish(child_name, child));
    n.cumulative_time_us += n.children.back().cumulative_time_us;
  }
  return n;
}

void assign_shares(InitNode& n, std::int64_t total) {
  n.share_of_total = total > 0 ? static_cast<double>(n.cumulative_time_us) / static_cast<double>(total) : 0.0;
  for (auto& c : n.children) assign_shares(c, total);
}

}  // namespace

const InitNode* InitNode::find(std::string_view dotted) const {
  if (dotted == name) return this;
  for (const auto& c : children) {
    if (dotted == c.name) return &c;
    if (dotted.size() > c.name.size() && dotted.substr(0, c.name.size()) == c.name && dotted[c.name.size()] == '.') {
      return c.find(dotted);
    }
  }
  return nullptr;
}

InitNode build_init_tree(std::span<const ImportTiming> imports) {
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> per_module;  // sum, count
  for (const auto& t : imports) {
    auto& [sum, count] = per_module[t.module];
    sum += t.self_time_us;
    ++count;
  }
  Builder root;
  for (const auto& [module, agg] : per_module) {
    const auto& [sum, count] = agg;
    Builder* cur = &root;
    std::size_t start = 0;
    while (true) {
      const auto dot = module.find('.', start);
      cur = &cur->children[module.substr(start, dot == std::string::npos ? std::string::npos : dot - start)];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    cur->self = (sum + count / 2) / count;
  }
  InitNode tree = finish(kInitRoot, root);
  assign_shares(tree, tree.cumulative_time_us);
  return tree;
}

GateResult gate(const InitNode& tree, std::span<const InvocationEvent> invocations, double threshold) {
  std::int64_t cold = 0;
  double e2e_sum = 0.0;
  for (const auto& inv : invocations) {
    if (!inv.cold_start) continue;
    ++cold;
    e2e_sum += static_cast<double>(inv.e2e_time_us);
  }
  if (cold == 0) throw Error(ErrorKind::NoColdStartData, "no cold-start invocations recorded");
  const double mean = e2e_sum / static_cast<double>(cold);
  GateResult g;
  g.threshold = threshold;
  g.init_ratio = mean > 0 ? static_cast<double>(tree.cumulative_time_us) / mean : 0.0;
  g.passes = g.init_ratio > threshold;
  return g;
}

}  // namespace pgo
