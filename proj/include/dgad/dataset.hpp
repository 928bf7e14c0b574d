#pragma once

#include "dgad/tgraph.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dgad {

/// A parsed dataset plus the original name of each dense node id.
struct LoadedGraph {
    EventStore store;
    std::vector<std::string> node_names;
};

/// Whitespace-separated "src dst [weight] t" lines; '%' and '#' start comments.
/// Integer node tokens are remapped densely in order of first appearance; edge
/// ids follow input order, so equal timestamps keep their input order.
LoadedGraph load_edge_list(const std::filesystem::path& path);

/// JODIE interaction CSV with a header row:
/// user_id,item_id,timestamp,state_label,feature_1,...
/// Items are offset past the largest user id; state_label is the edge label.
LoadedGraph load_jodie_csv(const std::filesystem::path& path);

/// Tab-separated "id src dst t label f_1 ... f_k" with a '#' header line.
/// Labels are -1 (unlabeled), 0 or 1; values are written with 17 significant digits.
void write_labeled_edges(const EventStore& store, const std::filesystem::path& path);
LoadedGraph load_labeled_edges(const std::filesystem::path& path);

/// "dense_id \t original_name" per node.
void write_node_map(const std::vector<std::string>& names, const std::filesystem::path& path);

/// Dispatches on a format tag: "edgelist", "jodie" or "labeled".
LoadedGraph load_dataset(const std::filesystem::path& path, const std::string& format);

}  // namespace dgad
