#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "hierfed/nn/param_set.hpp"

namespace hierfed::models {

struct EmbeddingRow {
    std::string student_id;
    std::string course;
    std::string demographic_variable;
    std::string subgroup;
    nn::Vec values;
};

/// Header: student_id,course,demographic_variable,subgroup,dim_0..dim_{k-1}.
/// Values are written with round-trip precision.
void write_embeddings_csv(std::span<const EmbeddingRow> rows, int k, std::ostream& out);

}  // namespace hierfed::models
