//! End-to-end installer behavior against temp-dir scopes and local fixture
//! repositories.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::Ordering;

use skilldex_core::install::{
    self, GitRef, InstallError, InstallOptions, INSTALL_FROM_PATH_CALLS,
};
use skilldex_core::manifest::{self, SourceTag};
use skilldex_core::scope::{self, ScopeContext, ScopeLevel};
use skilldex_testkit as testkit;
use tempfile::TempDir;

/// A home + project-dir pair with isolated scopes.
struct World {
    _tmp: TempDir,
    ctx: ScopeContext,
    project: PathBuf,
}

impl World {
    fn new() -> World {
        let tmp = TempDir::new().unwrap();
        let project = tmp.path().join("project");
        fs::create_dir_all(project.join(".git")).unwrap();
        let ctx = ScopeContext::new(tmp.path().join("home"), &project);
        World {
            ctx,
            project,
            _tmp: tmp,
        }
    }

    fn fixtures(&self) -> PathBuf {
        let dir = self.project.join("fixtures");
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn scope(&self, level: ScopeLevel) -> scope::ScopeConfig {
        scope::resolve_scope(level, &self.ctx).unwrap()
    }

    fn manifest(&self, level: ScopeLevel) -> manifest::Manifest {
        let config = self.scope(level);
        manifest::load_manifest(&config.manifest_path, level)
            .unwrap()
            .manifest
    }
}

#[test]
fn install_from_path_copies_and_records() {
    let world = World::new();
    let src = testkit::SkillSpec::valid("pr-review").write_to(&world.fixtures().join("pr-review"));

    let report = install::install_from_path(
        &src,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap();

    assert_eq!(report.installed.len(), 1);
    assert_eq!(report.installed[0].name, "pr-review");
    assert_eq!(report.installed[0].score, 100);

    let installed_dir = world.scope(ScopeLevel::Project).skills_dir.join("pr-review");
    assert!(installed_dir.join("SKILL.md").is_file());
    testkit::assert_trees_equal(&src, &installed_dir);

    let manifest = world.manifest(ScopeLevel::Project);
    let entry = &manifest.skills["pr-review"];
    assert_eq!(entry.version, "1.0.0");
    assert_eq!(entry.source, SourceTag::Local);
    assert_eq!(entry.path, "skills/pr-review");
    assert_eq!(entry.score, 100);
}

#[test]
fn low_score_skill_installs_with_warnings() {
    let world = World::new();
    let src = testkit::SkillSpec::valid("rough")
        .description(testkit::DESC_12_WORDS)
        .write_to(&world.fixtures().join("rough"));

    let report = install::install_from_path(
        &src,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap();
    assert_eq!(report.installed[0].score, 90);
    assert!(report.warnings.iter().any(|w| w.contains("description too short")));
    assert!(world.manifest(ScopeLevel::Project).skills.contains_key("rough"));
}

#[test]
fn unidentifiable_skill_blocks_install() {
    let world = World::new();
    let dir = world.fixtures().join("anon");
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("SKILL.md"), "no frontmatter at all\n").unwrap();

    let err = install::install_from_path(
        &dir,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap_err();
    assert!(matches!(err, InstallError::UnidentifiableSkill(_)));
    assert!(world.manifest(ScopeLevel::Project).skills.is_empty());
}

#[test]
fn reinstall_requires_force_and_leaves_state_unchanged() {
    let world = World::new();
    let src = testkit::SkillSpec::valid("pinned").write_to(&world.fixtures().join("pinned"));
    let options = InstallOptions::local(ScopeLevel::Project);
    install::install_from_path(&src, &options, &world.ctx).unwrap();

    let config = world.scope(ScopeLevel::Project);
    let manifest_before = fs::read(&config.manifest_path).unwrap();
    let tree_before = testkit::tree_digest(&config.skills_dir);

    let err = install::install_from_path(&src, &options, &world.ctx).unwrap_err();
    assert!(matches!(err, InstallError::AlreadyInstalled { .. }));
    assert_eq!(fs::read(&config.manifest_path).unwrap(), manifest_before);
    assert_eq!(testkit::tree_digest(&config.skills_dir), tree_before);

    // With force, the replacement lands.
    let forced = InstallOptions {
        force: true,
        ..options
    };
    let upd =
        testkit::SkillSpec::valid("pinned").body("## Instructions\n\nnew body\n");
    let src2 = upd.write_to(&world.fixtures().join("pinned-v2"));
    install::install_from_path(&src2, &forced, &world.ctx).unwrap();
    let text = fs::read_to_string(config.skills_dir.join("pinned/SKILL.md")).unwrap();
    assert!(text.contains("new body"));
}

#[test]
fn scope_conflict_warns_but_installs() {
    let world = World::new();
    let src = testkit::SkillSpec::valid("everywhere").write_to(&world.fixtures().join("everywhere"));
    install::install_from_path(&src, &InstallOptions::local(ScopeLevel::Global), &world.ctx)
        .unwrap();
    let report =
        install::install_from_path(&src, &InstallOptions::local(ScopeLevel::Project), &world.ctx)
            .unwrap();
    assert_eq!(report.installed.len(), 1);
    assert!(report.warnings.iter().any(|w| w.contains("global")));

    let conflicts =
        install::detect_scope_conflicts("everywhere", ScopeLevel::Shared, &world.ctx).unwrap();
    assert_eq!(conflicts, vec![ScopeLevel::Project, ScopeLevel::Global]);
}

#[test]
fn resolve_skill_prefers_local() {
    let world = World::new();
    let src = testkit::SkillSpec::valid("dup").write_to(&world.fixtures().join("dup"));
    install::install_from_path(&src, &InstallOptions::local(ScopeLevel::Global), &world.ctx)
        .unwrap();
    install::install_from_path(&src, &InstallOptions::local(ScopeLevel::Project), &world.ctx)
        .unwrap();
    let (level, _) = scope::resolve_skill("dup", &world.ctx).unwrap().unwrap();
    assert_eq!(level, ScopeLevel::Project);
    assert!(scope::resolve_skill("nowhere", &world.ctx).unwrap().is_none());
}

#[test]
fn uninstall_removes_only_target_scope() {
    let world = World::new();
    let src = testkit::SkillSpec::valid("twice").write_to(&world.fixtures().join("twice"));
    install::install_from_path(&src, &InstallOptions::local(ScopeLevel::Global), &world.ctx)
        .unwrap();
    install::install_from_path(&src, &InstallOptions::local(ScopeLevel::Project), &world.ctx)
        .unwrap();

    let global_manifest_before = fs::read(&world.scope(ScopeLevel::Global).manifest_path).unwrap();
    install::uninstall("twice", ScopeLevel::Project, &world.ctx).unwrap();

    assert!(scope::resolve_skill("twice", &world.ctx).unwrap().is_some());
    assert_eq!(
        scope::resolve_skill("twice", &world.ctx).unwrap().unwrap().0,
        ScopeLevel::Global
    );
    assert!(!world.scope(ScopeLevel::Project).skills_dir.join("twice").exists());
    assert_eq!(
        fs::read(&world.scope(ScopeLevel::Global).manifest_path).unwrap(),
        global_manifest_before
    );

    install::uninstall("twice", ScopeLevel::Global, &world.ctx).unwrap();
    assert!(scope::resolve_skill("twice", &world.ctx).unwrap().is_none());

    let err = install::uninstall("twice", ScopeLevel::Global, &world.ctx).unwrap_err();
    assert!(matches!(err, InstallError::NotInstalled { .. }));
}

fn two_skill_repo(parent: &Path) -> PathBuf {
    let repo = parent.join("repo");
    testkit::SkillSpec::valid("alpha").write_to(&repo.join("skills/alpha"));
    testkit::SkillSpec::valid("beta").write_to(&repo.join("skills/beta"));
    testkit::init_git_repo(&repo);
    repo
}

#[test]
fn git_install_discovers_all_skills() {
    let world = World::new();
    let repo = two_skill_repo(&world.fixtures());
    let before = INSTALL_FROM_PATH_CALLS.load(Ordering::Relaxed);

    let git_ref = GitRef {
        repo_url: testkit::file_url(&repo),
        branch: None,
        subpath: None,
    };
    let options = InstallOptions {
        scope: ScopeLevel::Project,
        force: false,
        source_tag: SourceTag::Community,
        source_url: Some(format!("git+{}", testkit::file_url(&repo))),
    };
    let report = install::install_from_git(&git_ref, &options, &world.ctx).unwrap();

    let names: Vec<&str> = report.installed.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, ["alpha", "beta"]);
    // Convergence: both installs flowed through the local-path routine.
    assert_eq!(INSTALL_FROM_PATH_CALLS.load(Ordering::Relaxed) - before, 2);

    let manifest = world.manifest(ScopeLevel::Project);
    assert_eq!(manifest.skills["alpha"].source, SourceTag::Community);
    assert_eq!(
        manifest.skills["alpha"].source_url.as_deref(),
        Some(format!("git+{}", testkit::file_url(&repo)).as_str())
    );
}

#[test]
fn git_install_honors_subpath() {
    let world = World::new();
    let repo = two_skill_repo(&world.fixtures());
    let git_ref = GitRef {
        repo_url: testkit::file_url(&repo),
        branch: Some("main".into()),
        subpath: Some("skills/beta".into()),
    };
    let report = install::install_from_git(
        &git_ref,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap();
    assert_eq!(report.installed.len(), 1);
    assert_eq!(report.installed[0].name, "beta");
    assert!(!world.manifest(ScopeLevel::Project).skills.contains_key("alpha"));
}

#[test]
fn missing_subpath_leaves_manifest_unchanged() {
    let world = World::new();
    let repo = two_skill_repo(&world.fixtures());
    let config = world.scope(ScopeLevel::Project);
    let git_ref = GitRef {
        repo_url: testkit::file_url(&repo),
        branch: None,
        subpath: Some("skills/gamma".into()),
    };
    let err = install::install_from_git(
        &git_ref,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap_err();
    assert!(matches!(err, InstallError::SubpathMissing(_)));
    assert!(!config.manifest_path.exists());
}

#[test]
fn update_refetches_and_rescores() {
    let world = World::new();
    let repo = world.fixtures().join("single");
    testkit::SkillSpec::valid("tracked").write_to(&repo.join("tracked"));
    testkit::init_git_repo(&repo);
    let url = testkit::file_url(&repo);

    let options = InstallOptions {
        scope: ScopeLevel::Project,
        force: false,
        source_tag: SourceTag::Community,
        source_url: Some(url.clone()),
    };
    install::install_from_source_url(&url, &options, &world.ctx).unwrap();
    assert_eq!(world.manifest(ScopeLevel::Project).skills["tracked"].score, 100);

    // Upstream drops its description below the word threshold.
    testkit::SkillSpec::valid("tracked")
        .description(testkit::DESC_12_WORDS)
        .write_to(&repo.join("tracked"));
    testkit::commit_all(&repo, "worse description");

    let report = install::update("tracked", ScopeLevel::Project, &world.ctx).unwrap();
    assert_eq!(report.installed[0].score, 90);
    assert_eq!(world.manifest(ScopeLevel::Project).skills["tracked"].score, 90);
}

#[test]
fn update_local_source_fails() {
    let world = World::new();
    let src = testkit::SkillSpec::valid("local-only").write_to(&world.fixtures().join("local-only"));
    install::install_from_path(&src, &InstallOptions::local(ScopeLevel::Project), &world.ctx)
        .unwrap();
    let err = install::update("local-only", ScopeLevel::Project, &world.ctx).unwrap_err();
    assert!(matches!(err, InstallError::NoSourceUrl { .. }));
    assert!(matches!(
        install::update("ghost", ScopeLevel::Project, &world.ctx),
        Err(InstallError::NotInstalled { .. })
    ));
}

/// Exhaustive small-tree enumeration oracle for skill-directory discovery.
#[test]
fn discovery_matches_brute_force_enumeration() {
    // Template paths with their depth below the search root; ".h" is hidden.
    const NODES: [(&str, usize); 7] = [
        ("a", 1),
        ("a/b", 2),
        ("a/b/c", 3),
        ("a/b/c/f", 4),
        ("d", 1),
        ("d/e", 2),
        (".h", 1),
    ];

    for mask in 0..(1u32 << (NODES.len() + 1)) {
        let tmp = TempDir::new().unwrap();
        let root = tmp.path();
        let root_has_skill = mask & 1 != 0;
        if root_has_skill {
            fs::write(root.join("SKILL.md"), "x").unwrap();
        }
        for (i, (rel, _)) in NODES.iter().enumerate() {
            let dir = root.join(rel);
            fs::create_dir_all(&dir).unwrap();
            if mask & (1 << (i + 1)) != 0 {
                fs::write(dir.join("SKILL.md"), "x").unwrap();
            }
        }

        let got = install::discover_skill_dirs(root);

        // Oracle: root wins outright; otherwise keep marked, visible,
        // depth<=3 dirs with no marked ancestor.
        let expected: Vec<PathBuf> = if root_has_skill {
            vec![root.to_path_buf()]
        } else {
            let marked: Vec<&str> = NODES
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << (i + 1)) != 0)
                .map(|(_, (rel, _))| *rel)
                .collect();
            let mut keep: Vec<&str> = Vec::new();
            let mut sorted = marked.clone();
            sorted.sort_by_key(|rel| rel.split('/').count());
            for rel in sorted {
                let depth = NODES.iter().find(|(r, _)| *r == rel).unwrap().1;
                if rel.starts_with('.') || depth > 3 {
                    continue;
                }
                if keep.iter().any(|k| rel.starts_with(&format!("{}/", k))) {
                    continue;
                }
                keep.push(rel);
            }
            let mut paths: Vec<PathBuf> = keep.iter().map(|rel| root.join(rel)).collect();
            paths.sort();
            paths
        };

        assert_eq!(got, expected, "mask {:#b}", mask);
    }
}
