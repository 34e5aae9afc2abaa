use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIOLOGY_MIN_GRADE: &str = "SELECT e.student, MIN(e.grade) FROM exams e, courses c
WHERE e.cid = c.cid AND c.faculty = 'Biology' GROUP BY e.student;
";

const UNIVERSITY: &str = "SELECT enrolled.program, exams.cid, MIN(exams.grade)
FROM exams, courses, enrolled, tutors
WHERE exams.cid = courses.cid AND exams.student = enrolled.student AND exams.cid = tutors.cid
  AND courses.faculty = 'ComputerScience' AND exams.student = tutors.student
  AND tutors.num_semesters > 1
GROUP BY enrolled.program, exams.cid;
";

const TRIANGLE: &str = "SELECT r.a FROM r, s, t WHERE r.b = s.b AND s.c = t.c AND t.a = r.a";

fn semiplan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiplan"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn university_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("q.sql"), UNIVERSITY).unwrap();
    let db = dir.path().join("db");
    fs::create_dir(&db).unwrap();
    fs::write(
        db.join("exams.csv"),
        "cid,student,grade\nc1,s1,3\nc1,s1,3\nc1,s2,5\nc2,s1,4\nc3,s3,2\n",
    )
    .unwrap();
    fs::write(
        db.join("courses.csv"),
        "cid,faculty\nc1,ComputerScience\nc2,ComputerScience\nc3,Law\n",
    )
    .unwrap();
    fs::write(
        db.join("enrolled.csv"),
        "student,program\ns1,BSc\ns2,MSc\ns2,BSc\ns3,BSc\n",
    )
    .unwrap();
    fs::write(
        db.join("tutors.csv"),
        "cid,student,num_semesters\nc1,s1,2\nc1,s1,3\nc1,s2,1\nc2,s1,4\nc3,s3,5\n",
    )
    .unwrap();
    dir
}

#[test]
fn analyze_reports_the_guard() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("min_grade.sql"), BIOLOGY_MIN_GRADE).unwrap();
    let o = semiplan(&["analyze", "min_grade.sql"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("0MA: yes, guard: exams"), "{text}");
    assert!(text.contains("mode: 0ma"));
}

#[test]
fn analyze_university_is_not_zero_ma() {
    let dir = university_dir();
    let o = semiplan(&["analyze", "q.sql"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("0MA: no"), "{text}");
    assert!(text.contains("join tree (depth 1)"), "{text}");
}

#[test]
fn compare_university_is_bag_equal() {
    let dir = university_dir();
    let o = semiplan(
        &["compare", "q.sql", "--db", "db", "--mode", "full-enum"],
        dir.path(),
    );
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("bag-equal: true"));
    let number = |prefix: &str| -> u64 {
        text.lines()
            .find_map(|l| l.strip_prefix(prefix))
            .and_then(|n| n.trim().parse().ok())
            .unwrap_or_else(|| panic!("{prefix} missing in {text}"))
    };
    assert!(number("naive max intermediate:") >= number("plan max intermediate:"));
}

#[test]
fn exec_prints_tsv_and_stats() {
    let dir = university_dir();
    let o = semiplan(
        &["exec", "q.sql", "--db", "db", "--format", "tsv", "--stats"],
        dir.path(),
    );
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.remove(0), "program\tcid\tmin_grade");
    lines.sort_unstable();
    // c1: s1 (BSc, grade 3 twice) and s2 excluded by num_semesters; c2: s1 (BSc, 4).
    assert_eq!(lines, ["BSc\tc1\t3", "BSc\tc2\t4"]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("statement, rows, micros"), "{err}");
}

#[test]
fn ghd_width_one_on_triangle_finds_nothing() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tri.sql"), TRIANGLE).unwrap();
    let o = semiplan(&["ghd", "tri.sql", "--width", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("no decomposition of width 1"));

    let o = semiplan(&["ghd", "tri.sql", "--width", "2", "--json"], dir.path());
    assert!(o.status.success());
    fs::write(dir.path().join("g.json"), stdout(&o)).unwrap();
    let o = semiplan(&["ghd", "tri.sql", "--ghd", "g.json"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("valid: true"));

    let o = semiplan(
        &["ghd", "tri.sql", "--width", "2", "--enumerate", "5"],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("decompositions of width at most 2"));
}

#[test]
fn cyclic_rewrite_needs_a_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tri.sql"), TRIANGLE).unwrap();
    let o = semiplan(&["rewrite", "tri.sql"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--ghd"));
    let o = semiplan(&["rewrite", "tri.sql", "--width", "2"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("v1_setup"));
}

#[test]
fn rewrite_is_byte_stable() {
    let dir = university_dir();
    for dialect in ["postgres", "duckdb", "spark", "generic"] {
        let a = semiplan(
            &["rewrite", "q.sql", "--dialect", dialect, "--with-cleanup"],
            dir.path(),
        );
        let b = semiplan(
            &["rewrite", "q.sql", "--dialect", dialect, "--with-cleanup"],
            dir.path(),
        );
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
    let spark = stdout(&semiplan(
        &["rewrite", "q.sql", "--dialect", "spark"],
        dir.path(),
    ));
    assert!(spark
        .lines()
        .filter(|l| l.starts_with("CREATE"))
        .all(|l| l.contains("TEMP VIEW")));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.sql"), "SELECT FROM").unwrap();
    let o = semiplan(&["analyze", "bad.sql"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.sql"));
    assert_eq!(
        semiplan(&["analyze", "missing.sql"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        semiplan(&["exec", "bad.sql"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(semiplan(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn generated_instances_compare_equal() {
    let dir = tempfile::tempdir().unwrap();
    for (seed, kind) in [
        (1, "acyclic"),
        (2, "guarded"),
        (3, "sum"),
        (4, "cyclic"),
        (5, "skewed"),
    ] {
        let out = format!("g{seed}");
        let o = semiplan(
            &[
                "generate",
                "--seed",
                &seed.to_string(),
                "--kind",
                kind,
                "--out",
                &out,
            ],
            dir.path(),
        );
        assert!(o.status.success());
        let query = format!("{out}/query.sql");
        let mut args = vec!["compare", query.as_str(), "--db", out.as_str()];
        if kind == "cyclic" {
            args.extend(["--width", "2"]);
        }
        let o = semiplan(&args, dir.path());
        assert_eq!(o.status.code(), Some(0), "{kind}: {}", stdout(&o));
    }
}

#[test]
fn catalog_resolves_unqualified_columns() {
    let dir = university_dir();
    fs::write(
        dir.path().join("u.sql"),
        "SELECT program, MIN(grade) FROM exams, enrolled WHERE exams.student = enrolled.student GROUP BY program",
    )
    .unwrap();
    assert_eq!(
        semiplan(&["analyze", "u.sql"], dir.path()).status.code(),
        Some(2)
    );
    let o = semiplan(&["analyze", "u.sql", "--catalog", "db"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = semiplan(
        &["exec", "u.sql", "--db", "db", "--format", "tsv"],
        dir.path(),
    );
    assert!(o.status.success());
}
