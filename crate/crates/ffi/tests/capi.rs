use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use cgprobe::embeddings::{write_embeddings, EmbeddingHeader, EmbeddingRecord};
use cgprobe_ffi::*;

const ONE: &str = "# sent_id = a\n\
1\tराम\tराम\tPROPN\t_\tGender=Masc\t2\tnsubj\t_\t_\n\
2\tगया\tजा\tVERB\t_\tGender=Masc\t0\troot\t_\t_\n\
3\t।\t।\tPUNCT\t_\t_\t2\tpunct\t_\t_\n\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = cgp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn parse(text: &str, split: CgpSplit) -> *mut CgpTreebank {
    let mut tb = ptr::null_mut();
    assert_eq!(cgp_treebank_parse(c(text).as_ptr(), split, &mut tb), CgpStatus::Ok);
    tb
}

#[test]
fn parse_count_serialize_free() {
    unsafe {
        let tb = parse(ONE, CgpSplit::Dev);
        let (mut sentences, mut tokens, mut depth) = (0, 0, 0);
        assert_eq!(cgp_treebank_sentence_count(tb, &mut sentences), CgpStatus::Ok);
        assert_eq!(cgp_treebank_token_count(tb, &mut tokens), CgpStatus::Ok);
        assert_eq!(cgp_treebank_tree_depth(tb, 0, &mut depth), CgpStatus::Ok);
        assert_eq!((sentences, tokens, depth), (1, 3, 1));
        assert!(cgp_last_error_message().is_null());

        let mut text: *mut c_char = ptr::null_mut();
        assert_eq!(cgp_treebank_serialize(tb, &mut text), CgpStatus::Ok);
        assert_eq!(CStr::from_ptr(text).to_str().unwrap(), ONE);
        cgp_string_free(text);

        assert_eq!(cgp_treebank_tree_depth(tb, 1, &mut depth), CgpStatus::OutOfRange);
        assert!(last_error().contains("out of range"));
        cgp_treebank_free(tb);
        cgp_treebank_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut tb = ptr::null_mut();
        let bad = c("1\tx\tx\tNOUN\t_\t_\t7\troot\t_\t_\n\n");
        assert_eq!(cgp_treebank_parse(bad.as_ptr(), CgpSplit::Train, &mut tb), CgpStatus::Parse);
        assert!(tb.is_null());
        assert!(last_error().starts_with("line "));

        assert_eq!(cgp_treebank_parse(ptr::null(), CgpSplit::Train, &mut tb), CgpStatus::NullPointer);
        let invalid = [0xffu8, 0];
        assert_eq!(cgp_treebank_parse(invalid.as_ptr().cast(), CgpSplit::Train, &mut tb), CgpStatus::InvalidUtf8);

        let missing = c("/nonexistent/x-train.conllu");
        assert_eq!(cgp_treebank_read(missing.as_ptr(), CgpSplit::Train, true, &mut tb), CgpStatus::Io);
        assert!(last_error().contains("/nonexistent/x-train.conllu"));

        let mut n = 0;
        assert_eq!(cgp_treebank_sentence_count(ptr::null(), &mut n), CgpStatus::NullPointer);
    }
}

#[test]
fn weighted_f1_through_c() {
    let p: Vec<CString> = ["a", "b", "b", "b"].map(c).into();
    let g: Vec<CString> = ["a", "a", "b", "b"].map(c).into();
    let pp: Vec<*const c_char> = p.iter().map(|s| s.as_ptr()).collect();
    let gp: Vec<*const c_char> = g.iter().map(|s| s.as_ptr()).collect();
    let mut f = 0.0;
    unsafe {
        assert_eq!(cgp_weighted_f1(pp.as_ptr(), gp.as_ptr(), 4, &mut f), CgpStatus::Ok);
        assert!((f - 11.0 / 15.0).abs() < 1e-12);
        assert_eq!(cgp_weighted_f1(pp.as_ptr(), gp.as_ptr(), 0, &mut f), CgpStatus::Contract);
    }
}

#[test]
fn embeddings_validate_through_c() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.vyke");
    let header = EmbeddingHeader {
        model_name: "m".into(),
        num_layers: 1,
        hidden_dim: 2,
        sentence_count: 1,
    };
    let record = EmbeddingRecord::new("a", 3, Vec::new(), 1, 2, vec![0.5; 8]).unwrap();
    write_embeddings(&path, &header, [&record]).unwrap();
    let cpath = c(path.to_str().unwrap());
    unsafe {
        let tb = parse(ONE, CgpSplit::Dev);
        let handles = [tb as *const CgpTreebank];
        let mut passed = false;
        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(cgp_embeddings_validate(cpath.as_ptr(), handles.as_ptr(), 1, &mut passed, &mut json), CgpStatus::Ok);
        assert!(passed);
        let report: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(report["records"], 1);
        cgp_string_free(json);

        let short = c(&ONE.replace("3\t।\t।\tPUNCT\t_\t_\t2\tpunct\t_\t_\n", ""));
        let mut tb2 = ptr::null_mut();
        assert_eq!(cgp_treebank_parse(short.as_ptr(), CgpSplit::Dev, &mut tb2), CgpStatus::Ok);
        let handles = [tb2 as *const CgpTreebank];
        assert_eq!(cgp_embeddings_validate(cpath.as_ptr(), handles.as_ptr(), 1, &mut passed, ptr::null_mut()), CgpStatus::Ok);
        assert!(!passed);
        cgp_treebank_free(tb);
        cgp_treebank_free(tb2);
    }
}

#[test]
fn generate_cg_through_c() {
    let [train, dev, test] = cgprobe::synth::synthetic_triple([20, 6, 8], &Default::default());
    let text = |tb| cgprobe::conllu::serialize(&tb);
    unsafe {
        let src = [
            parse(&text(train), CgpSplit::Train),
            parse(&text(dev), CgpSplit::Dev),
            parse(&text(test), CgpSplit::Test),
        ];
        let mut out = [ptr::null_mut(); 3];
        let [a, b, d] = &mut out;
        assert_eq!(cgp_generate_cg(src[0], src[1], src[2], 3, a, b, d), CgpStatus::Ok);
        let counts: Vec<usize> = out
            .iter()
            .map(|&h| {
                let mut n = 0;
                assert_eq!(cgp_treebank_sentence_count(h, &mut n), CgpStatus::Ok);
                n
            })
            .collect();
        assert_eq!(counts, [32, 24, 80]);

        let [a, b, d] = &mut [ptr::null_mut(); 3];
        assert_eq!(cgp_generate_cg(src[1], src[0], src[2], 3, a, b, d), CgpStatus::Contract);
        for h in src.into_iter().chain(out) {
            cgp_treebank_free(h);
        }
    }
}

#[test]
fn generated_header_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/cgprobe.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["cgp_treebank_parse", "cgp_generate_cg", "CGP_STATUS_PANIC", "typedef struct CgpTreebank CgpTreebank"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(&header).status() else {
        return;
    };
    assert!(status.success());
}
