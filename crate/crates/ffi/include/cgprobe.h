#ifndef CGPROBE_H
#define CGPROBE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CgpStatus {
  CGP_STATUS_OK = 0,
  CGP_STATUS_NULL_POINTER = 1,
  CGP_STATUS_INVALID_UTF8 = 2,
  CGP_STATUS_PARSE = 3,
  CGP_STATUS_IO = 4,
  CGP_STATUS_FORMAT = 5,
  CGP_STATUS_MISSING_RECORD = 6,
  CGP_STATUS_CONTRACT = 7,
  CGP_STATUS_CONFIG = 8,
  CGP_STATUS_DATA = 9,
  CGP_STATUS_PROBE = 10,
  CGP_STATUS_OUT_OF_RANGE = 11,
  CGP_STATUS_PANIC = 12,
} CgpStatus;

typedef enum CgpSplit {
  CGP_SPLIT_TRAIN = 0,
  CGP_SPLIT_DEV = 1,
  CGP_SPLIT_TEST = 2,
} CgpSplit;

// Opaque treebank handle.
typedef struct CgpTreebank CgpTreebank;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL after a
// successful one. Valid until the next library call on the same thread.
const char *cgp_last_error_message(void);

// Parse CoNLL-U text strictly.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer.
enum CgpStatus cgp_treebank_parse(const char *text, enum CgpSplit split, struct CgpTreebank **out);

// Read a CoNLL-U file. With `lenient`, invalid sentences are skipped.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum CgpStatus cgp_treebank_read(const char *path,
                                 enum CgpSplit split,
                                 bool lenient,
                                 struct CgpTreebank **out);

// # Safety
// `tb` must be NULL or a handle from this library that was not yet freed.
void cgp_treebank_free(struct CgpTreebank *tb);

// # Safety
// `tb` must be a live handle and `out` a writable pointer.
enum CgpStatus cgp_treebank_sentence_count(const struct CgpTreebank *tb, size_t *out);

// # Safety
// `tb` must be a live handle and `out` a writable pointer.
enum CgpStatus cgp_treebank_token_count(const struct CgpTreebank *tb, size_t *out);

// Serialize to CoNLL-U. Release the string with [`cgp_string_free`].
//
// # Safety
// `tb` must be a live handle and `out` a writable pointer.
enum CgpStatus cgp_treebank_serialize(const struct CgpTreebank *tb, char **out);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void cgp_string_free(char *s);

// Depth in edges of sentence `index` (0-based).
//
// # Safety
// `tb` must be a live handle and `out` a writable pointer.
enum CgpStatus cgp_treebank_tree_depth(const struct CgpTreebank *tb, size_t index, size_t *out);

// Support-weighted F1 over `len` parallel label strings.
//
// # Safety
// `predictions` and `golds` must each point to `len` NUL-terminated strings.
enum CgpStatus cgp_weighted_f1(const char *const *predictions,
                               const char *const *golds,
                               size_t len,
                               double *out);

// Validate a VYKE1 embedding file against `count` treebanks. `passed`
// receives the verdict; `report_json`, if not NULL, receives the report
// as JSON (release with [`cgp_string_free`]). A file that fails
// validation still returns `CGP_STATUS_OK`.
//
// # Safety
// `path` must be a NUL-terminated string, `treebanks` must point to
// `count` live handles and `passed` must be writable.
enum CgpStatus cgp_embeddings_validate(const char *path,
                                       const struct CgpTreebank *const *treebanks,
                                       size_t count,
                                       bool *passed,
                                       char **report_json);

// Generate colorless-green treebanks with the default generation settings
// and `seed`. Inputs must carry the train, dev and test splits. On
// success the three outputs are new handles.
//
// # Safety
// Inputs must be live handles and outputs writable pointers.
enum CgpStatus cgp_generate_cg(const struct CgpTreebank *train,
                               const struct CgpTreebank *dev,
                               const struct CgpTreebank *test,
                               uint64_t seed,
                               struct CgpTreebank **out_train,
                               struct CgpTreebank **out_dev,
                               struct CgpTreebank **out_test);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CGPROBE_H */
