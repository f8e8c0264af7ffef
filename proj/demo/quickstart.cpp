// Builds a factored index in memory, saves it, and answers a query from the loaded copy.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "mtix/mtix.hpp"

int main() {
    std::istringstream corpus(
        "d0\tred red blue\n"
        "d1\tred red red red blue blue\n"
        "d2\tred red blue green\n"
        "d3\tgreen green\n"
        "d4\tred red red red red red blue blue blue green green\n");
    auto v = mtix::ingest_tsv(corpus);
    auto f = mtix::factor(v);
    mtix::verify_exact(v, f);

    auto s = mtix::stats(v, f, mtix::CodecConfig{});
    std::cout << "terms " << v.num_terms() << ", docs " << v.num_docs << ", nnz " << s.nnz_v << '\n'
              << "meta-terms " << f.metaterms.size() << ", nnz(W) " << s.nnz_w << ", nnz(H) " << s.nnz_h << '\n';

    auto path = (std::filesystem::temp_directory_path() / "mtix_quickstart.mtix").string();
    auto bytes = mtix::save_index(mtix::make_index(v, f, mtix::CodecConfig{}), path);
    auto index = mtix::load_index(path);
    std::filesystem::remove(path);
    std::cout << "saved and reloaded " << bytes << " bytes\n";

    for (auto const& hit : mtix::top_k(index.factors, index.lexicon, mtix::Query{{"red", "green"}, 3})) {
        std::cout << index.doc_names[hit.doc] << '\t' << hit.score << '\n';
    }
    return 0;
}
