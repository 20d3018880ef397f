#pragma once

#include <string>

#include "sqlsv/sql/ast.hpp"

namespace sqlsv::sql {

// Renders a statement (rooted at Select) or any expression-shaped tree back to
// SQL text. parse(render(ast)) reproduces `ast`.
std::string render(const SqlAst& ast);

// Renders the subtree rooted at `id`.
std::string render_node(const SqlAst& ast, NodeId id);

}  // namespace sqlsv::sql
