try {
    BufferedReader reader = new BufferedReader(new FileReader("notes.txt"));
    String line = reader.readLine();
    while (line != null) {
        System.out.println(line);
        line = reader.readLine();
    }
    reader.close();
} catch (Exception e) {
    e.printStackTrace();
}
