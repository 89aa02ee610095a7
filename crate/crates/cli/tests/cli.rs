use std::path::Path;
use std::process::{Command, Output};

fn dron(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dron"));
    cmd.args(args);
    match out_dir {
        Some(dir) => cmd.env("DRON_OUTPUT_DIR", dir),
        None => cmd.env_remove("DRON_OUTPUT_DIR"),
    };
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn selfcheck_passes() {
    let o = dron(&["selfcheck"], None);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn gradcheck_reports_every_variant() {
    let o = dron(&["gradcheck", "--networks", "2"], None);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn train_then_eval_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("tiny.conf");
    std::fs::write(
        &conf,
        "env = quizbowl\nagent = dron_moe\nepochs = 1\nsteps_per_epoch = 50\neval_games = 3\nlearn_start = 10\nbatch_size = 4\noutput_dir = ignored\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = dron(&["train", conf.to_str().unwrap()], Some(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ckpt = out.join("seed1/checkpoint.txt");
    assert!(ckpt.exists() && out.join("summary.csv").exists());

    let trace = dir.path().join("trace.csv");
    let o = dron(
        &[
            "eval",
            ckpt.to_str().unwrap(),
            "--opponent",
            "type4",
            "--games",
            "4",
            "--trace",
            trace.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("games 4 mean_reward"));
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("game,t,"));

    let o = dron(
        &[
            "ttest",
            out.join("summary.csv").to_str().unwrap(),
            out.join("summary.csv").to_str().unwrap(),
        ],
        None,
    );
    // One seed gives one pair, too few for a t-test.
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ttest_on_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let header = "seed,mean_reward,max_reward,win,tie,loss,rush,miss\n";
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, format!("{header}1,1,0,,,,,\n2,2,0,,,,,\n3,3,0,,,,,\n")).unwrap();
    std::fs::write(&b, format!("{header}1,0,0,,,,,\n2,0,0,,,,,\n3,0,0,,,,,\n")).unwrap();
    let o = dron(&["ttest", a.to_str().unwrap(), b.to_str().unwrap()], None);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = text.lines().last().unwrap();
    assert!(row.starts_with("3.464102,2,0.0741"), "{text}");
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "gamma = 1.5\n").unwrap();
    let o = dron(&["train", conf.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    let o = dron(
        &["eval", dir.path().join("missing.txt").to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
}
