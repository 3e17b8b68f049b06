"""
First-stage retrieval: BM25, dense inner-product search, and hybrid fusion
==========================================================================

Builds both index types over a tiny in-memory corpus and shows how the
two score scales are normalized and fused into one candidate list.
"""

from rede import (
    Document,
    FusionConfig,
    HashingEncoder,
    build_dense_index,
    build_sparse_index,
    dense_search,
    hybrid_search,
    sparse_search,
)

corpus = {
    "d1": Document("d1", "", "solar panels convert sunlight into electricity"),
    "d2": Document("d2", "", "wind turbines generate electricity from moving air"),
    "d3": Document("d3", "", "photosynthesis converts sunlight into chemical energy"),
    "d4": Document("d4", "", "battery storage smooths electricity supply"),
    "d5": Document("d5", "", "tidal power stations use ocean currents"),
}

# sparse leg: BM25 over an inverted index
sparse = build_sparse_index(corpus)
print("BM25 for 'sunlight electricity':")
for doc_id, score in sparse_search(sparse, "sunlight electricity", 5).entries:
    print(f"  {doc_id}  {score:.4f}")

# dense leg: hashed bag-of-words encoder stands in for a neural encoder
encoder = HashingEncoder(dim=32)
ids = sorted(corpus)
dense = build_dense_index(ids, encoder.encode([corpus[d].search_text for d in ids]))
query_vec = encoder.encode(["sunlight electricity"])[0]
print("\nInner-product for the same query:")
for doc_id, score in dense_search(dense, query_vec, 5).entries:
    print(f"  {doc_id}  {score:.4f}")

# fused: min-max normalize each leg, weight by alpha, tie-break by doc id
print("\nHybrid (alpha=0.5):")
fused = hybrid_search(sparse, dense, "sunlight electricity", query_vec, 5, FusionConfig(alpha=0.5))
for doc_id, score in fused.entries:
    print(f"  {doc_id}  {score:.4f}")
